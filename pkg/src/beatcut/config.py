"""Pipeline configuration: every tunable threshold in one place.

Weights that share a letter in editing folklore live in different
namespaces here on purpose: scene-similarity attribute weights
(``footage.sim_*``), cue-intensity weights (``audio.weight_*``) and the
trim-scoring aesthetic/presence weights (``editor.*_weight``) are
unrelated knobs.

Precedence when assembling a run: CLI flags > manifest ``config`` block
> the defaults below.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from typing import Any, Mapping

from .core import DEFAULT_DURATION_TOLERANCE


@dataclass
class CoreConfig:
    duration_tolerance: float = DEFAULT_DURATION_TOLERANCE
    # Diagnostic objective weights; uniform by default (a repo choice).
    weight_visual: float = 1.0
    weight_narrative: float = 1.0
    weight_semantic: float = 1.0
    weight_rhythm: float = 1.0


@dataclass
class AudioConfig:
    sample_rate: int = 22050
    frame_size: int = 2048       # ~93 ms analysis window
    hop_size: int = 512          # ~23 ms hop, well under the 0.1 s threshold
    meter: int = 4               # beats per bar for downbeat extraction
    filter_window: float = 0.25  # de-duplication window for the keypoint pool
    min_gap: float = 0.5         # shortest allowed inter-cut segment
    max_gap: float = 8.0         # longest allowed inter-cut segment
    weight_downbeat: float = 0.5
    weight_pitch: float = 0.25
    weight_energy: float = 0.25
    pitch_threshold: float = 0.15   # chroma-novelty floor for pitch keypoints
    snap_tolerance: float = 0.5     # structure boundary -> keypoint snapping
    min_unit_length: float = 5.0    # fallback segmentation: shortest unit
    structure_fallback: bool = True


@dataclass
class FootageConfig:
    keyframe_fps: float = 2.0
    short_side: int = 360
    hist_bins_h: int = 16
    hist_bins_s: int = 4
    hist_bins_v: int = 4
    boundary_threshold: float = 0.4  # Hellinger distance between frame histograms
    refractory: float = 0.3          # seconds before another boundary may fire
    scene_tau: float = 0.5           # adjacent-shot similarity below this splits scenes
    sim_cinematography: float = 0.25
    sim_characters: float = 0.25
    sim_environment: float = 0.25
    sim_action: float = 0.25
    embed_dim: int = 256


@dataclass
class PlannerConfig:
    allocation_retries: int = 2  # regenerations with negative constraints before repair
    plan_retries: int = 1        # reprompts for out-of-pool scene ids before repair


@dataclass
class EditorConfig:
    # Trim-score weights by instruction category: presence dominates for
    # character-centric briefs, aesthetics otherwise.
    aes_weight_character: float = 0.4
    presence_weight_character: float = 0.6
    aes_weight_default: float = 0.6
    presence_weight_default: float = 0.4
    max_expansion: int = 2    # scenes added on each side per expansion level
    max_backtracks: int = 6   # reviewer rejections tolerated per planned shot


@dataclass
class ReviewerConfig:
    min_presence_ratio: float = 0.6
    min_quality: float = 0.5
    probe_frames: int = 3     # hierarchical sampling: probe first, then all
    luma_floor: float = 0.05  # mean luma below this = black frames
    luma_ceil: float = 0.98   # mean luma above this = blown frames
    variance_floor: float = 1e-4  # mean frame variance below this = frozen


@dataclass
class ProviderConfig:
    kind: str = "mock"  # "mock" | "http"
    max_attempts: int = 3
    backoff_base: float = 1.0  # seconds; doubles per transport retry
    concurrency: int = 4       # global in-flight request cap


@dataclass
class EvalConfig:
    harmony_threshold: float = 0.1
    sweep_thresholds: tuple[float, ...] = (0.05, 0.1, 0.2)


@dataclass
class PipelineConfig:
    core: CoreConfig = field(default_factory=CoreConfig)
    audio: AudioConfig = field(default_factory=AudioConfig)
    footage: FootageConfig = field(default_factory=FootageConfig)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    editor: EditorConfig = field(default_factory=EditorConfig)
    reviewer: ReviewerConfig = field(default_factory=ReviewerConfig)
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    seed: int = 0

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, overrides: Mapping[str, Any]) -> "PipelineConfig":
        """Build a config from defaults plus a (possibly partial) nested dict."""
        cfg = cls()
        cfg.apply(overrides)
        return cfg

    def apply(self, overrides: Mapping[str, Any]) -> None:
        for section, value in overrides.items():
            if section == "seed":
                self.seed = int(value)
                continue
            if not hasattr(self, section):
                raise KeyError(f"unknown config section {section!r}")
            target = getattr(self, section)
            if not isinstance(value, Mapping):
                raise TypeError(f"config section {section!r} must be a mapping")
            known = {f.name for f in fields(target)}
            for key, v in value.items():
                if key not in known:
                    raise KeyError(f"unknown config key {section}.{key}")
                current = getattr(target, key)
                if isinstance(current, tuple):
                    v = tuple(v)
                setattr(target, key, v)
