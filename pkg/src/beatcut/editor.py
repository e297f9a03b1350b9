"""Top-down visual grounding: resolve each planned shot to a concrete clip.

For every spec, in slot order: retrieve the candidate shot pool from the
assigned scene (expanding to neighbor scenes when exhausted), score every
feasible trim window, submit the best to the reviewer, and backtrack on
rejection. Committed source intervals accumulate in a used-interval set,
so no clip can overlap an earlier one by construction.

Trimming is an exact argmax over the discrete window set at keyframe
granularity: window duration equals the spec's grid-derived duration, so
duration fidelity holds exactly; only the window start snaps to the
keyframe grid.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .config import EditorConfig
from .core import Clip, InstructionCategory, Timeline, intervals_overlap
from .footage.types import Scene, Shot
from .planner import ShotSpec
from .provider.base import (
    Attachment,
    AttachmentKind,
    ModelRequest,
    Provider,
    Task,
    render_prompt,
)

log = logging.getLogger(__name__)

_TRIM_PROMPT = (
    "Rate each listed frame of this shot: 'aes' is aesthetic quality in [0,1]; "
    "'presence' is 1 if the target character is visibly salient in the frame "
    "else 0 (always 1 when no target is given)."
)


class UnrecoverableSpecError(RuntimeError):
    """A spec's pool is empty at max expansion with nothing committable."""


@dataclass(frozen=True)
class CandidatePool:
    spec_id: str
    shots: tuple[str, ...]
    expansion_level: int


@dataclass(frozen=True)
class TrimScore:
    aesthetic: float
    presence: float
    combined: float


class UsedIntervals:
    """Committed source intervals, per source, kept sorted."""

    def __init__(self):
        self._by_source: dict[str, list[tuple[float, float]]] = {}

    def add(self, source: str, t_in: float, t_out: float) -> None:
        spans = self._by_source.setdefault(source, [])
        spans.append((t_in, t_out))
        spans.sort()

    def overlaps(self, source: str, t_in: float, t_out: float) -> bool:
        return any(
            intervals_overlap(t_in, t_out, a, b)
            for a, b in self._by_source.get(source, [])
        )

    def max_free_span(self, source: str, t_in: float, t_out: float) -> float:
        """Longest contiguous unused stretch within [t_in, t_out)."""
        best, cursor = 0.0, t_in
        for a, b in self._by_source.get(source, []):
            if b <= t_in or a >= t_out:
                continue
            best = max(best, min(a, t_out) - cursor)
            cursor = max(cursor, b)
        return max(best, t_out - cursor)

    def snapshot(self) -> dict[str, list[tuple[float, float]]]:
        return {k: list(v) for k, v in self._by_source.items()}


class FrameScores:
    """Per-frame (aesthetic, presence) series for shots, provider-backed.

    Scores are fetched once per shot via the trim-feedback task and
    cached. Under the mock provider they come straight from the synthetic
    sidecar; under a real provider from a rubric call. When no target
    identity is set, presence is vacuously 1.
    """

    def __init__(self, provider: Provider, target: Optional[str] = None):
        self._provider = provider
        self.target = target
        self._cache: dict[str, tuple[list[float], list[float]]] = {}

    def get(self, shot: Shot) -> tuple[list[float], list[float]]:
        cached = self._cache.get(shot.id)
        if cached is not None:
            return cached
        times = [round(t, 3) for t in shot.keyframes]
        payload = {"shot_id": shot.id, "times": times}
        if shot.frame_paths:
            payload["paths"] = list(shot.frame_paths)
        request = ModelRequest(
            task=Task.TRIM_FEEDBACK,
            prompt=render_prompt(_TRIM_PROMPT, {
                "shot_id": shot.id, "times": times, "target": self.target or "",
            }),
            attachments=(Attachment(AttachmentKind.FRAMES, payload),),
        )
        frames = self._provider.complete(request).parsed["frames"]
        by_time = {round(f["t"], 3): f for f in frames}
        aes, presence = [], []
        for t in times:
            f = by_time.get(t, {"aes": 0.5, "presence": 1.0})
            aes.append(float(f["aes"]))
            presence.append(1.0 if self.target is None else float(f["presence"]))
        self._cache[shot.id] = (aes, presence)
        return self._cache[shot.id]


def retrieve_candidates(
    spec: ShotSpec,
    scenes: Sequence[Scene],
    shots_by_id: dict[str, Shot],
    used: UsedIntervals,
    level: int,
) -> CandidatePool:
    """Shot pool for a spec: the assigned scene, widened by ``level`` neighbors.

    Shots whose longest unused stretch is shorter than the spec duration
    are excluded; they cannot host any feasible window.
    """
    order = [s.id for s in scenes]
    try:
        center = order.index(spec.scene_id)
    except ValueError:
        raise KeyError(f"spec {spec.id} references unknown scene {spec.scene_id}")
    lo, hi = max(0, center - level), min(len(scenes), center + level + 1)
    shot_ids = [sid for scene in scenes[lo:hi] for sid in scene.shots]
    feasible = tuple(
        sid for sid in shot_ids
        if used.max_free_span(shots_by_id[sid].source,
                              shots_by_id[sid].t_in,
                              shots_by_id[sid].t_out) >= spec.duration - 1e-9
    )
    return CandidatePool(spec_id=spec.id, shots=feasible, expansion_level=level)


def window_frame_count(duration: float, fps: float) -> int:
    """Keyframes covered by a window: grid points in [start, start + duration)."""
    return max(1, int(math.ceil(duration * fps - 1e-9)))


def trim_shot(
    shot: Shot,
    spec: ShotSpec,
    frame_scores: tuple[Sequence[float], Sequence[float]],
    aes_weight: float,
    presence_weight: float,
    used: UsedIntervals,
    fps: float = 2.0,
    exclude_starts: frozenset[int] = frozenset(),
) -> Optional[tuple[Clip, TrimScore, int]]:
    """Best window of length spec.duration inside one shot.

    Slides at keyframe granularity, skipping windows that intersect used
    intervals or whose start index is excluded (earlier rejections).
    Returns (clip, score, start index), ties broken to the earliest
    window; None when no feasible window remains.
    """
    aes, presence = frame_scores
    n_frames = len(shot.keyframes)
    if n_frames == 0 or len(aes) != n_frames or len(presence) != n_frames:
        raise ValueError(f"shot {shot.id}: frame scores must match the keyframe grid")
    width = window_frame_count(spec.duration, fps)
    step = 1.0 / fps
    max_start = int(math.floor((shot.duration - spec.duration) * fps + 1e-9))
    best: Optional[tuple[float, int]] = None
    for i in range(0, max_start + 1):
        if i in exclude_starts or i + width > n_frames:
            continue
        t_in = shot.t_in + i * step
        t_out = t_in + spec.duration
        if used.overlaps(shot.source, t_in, t_out):
            continue
        s_aes = sum(aes[i:i + width]) / width
        r_presence = sum(presence[i:i + width]) / width
        combined = aes_weight * s_aes + presence_weight * r_presence
        if best is None or combined > best[0] + 1e-12:
            best = (combined, i)
    if best is None:
        return None
    combined, i = best
    t_in = shot.t_in + i * step
    width_slice = slice(i, i + width)
    score = TrimScore(
        aesthetic=sum(aes[width_slice]) / width,
        presence=sum(presence[width_slice]) / width,
        combined=combined,
    )
    clip = Clip(source=shot.source, t_in=t_in, t_out=t_in + spec.duration,
                origin_shot=shot.id, spec_id=spec.id)
    return clip, score, i


@dataclass
class EditTrace:
    """Observable record of the editor's per-spec decisions."""

    events: list[dict] = field(default_factory=list)

    def record(self, **event) -> None:
        self.events.append(event)


def _trim_weights(config: EditorConfig, category: InstructionCategory) -> tuple[float, float]:
    if category is InstructionCategory.CHARACTER_CENTRIC:
        return config.aes_weight_character, config.presence_weight_character
    return config.aes_weight_default, config.presence_weight_default


def edit_loop(
    plan: Sequence[ShotSpec],
    scenes: Sequence[Scene],
    shots_by_id: dict[str, Shot],
    reviewer,
    frame_scores: FrameScores,
    music_id: str,
    config: Optional[EditorConfig] = None,
    category: InstructionCategory = InstructionCategory.UNSPECIFIED,
    fps: float = 2.0,
    trace: Optional[EditTrace] = None,
) -> Timeline:
    """Resolve every spec to a committed clip; returns the final timeline.

    Rejected candidates are excluded window-by-window; an exhausted pool
    escalates the expansion level; after the backtrack budget, the
    best-scoring candidate rejected only for soft reasons is committed
    with a warning. Hard-constraint rejections are never overridden.
    """
    if not plan:
        raise ValueError("edit_loop requires a non-empty plan")
    cfg = config or EditorConfig()
    trace = trace if trace is not None else EditTrace()
    aes_w, presence_w = _trim_weights(cfg, category)
    used = UsedIntervals()
    committed: list[Clip] = []

    for spec in plan:
        clip = _resolve_spec(spec, scenes, shots_by_id, reviewer, frame_scores,
                             used, committed, music_id, cfg, aes_w, presence_w, fps, trace)
        committed.append(clip)
        used.add(clip.source, clip.t_in, clip.t_out)
        trace.record(action="commit", spec=spec.id, shot=clip.origin_shot,
                     t_in=round(clip.t_in, 3), t_out=round(clip.t_out, 3))
    return Timeline(clips=tuple(committed), music=music_id)


def _resolve_spec(
    spec: ShotSpec,
    scenes: Sequence[Scene],
    shots_by_id: dict[str, Shot],
    reviewer,
    frame_scores: FrameScores,
    used: UsedIntervals,
    committed: list[Clip],
    music_id: str,
    cfg: EditorConfig,
    aes_w: float,
    presence_w: float,
    fps: float,
    trace: EditTrace,
) -> Clip:
    level = 0
    backtracks = 0
    tried: dict[str, set[int]] = {}
    soft_fallback: Optional[tuple[float, Clip]] = None

    while backtracks < cfg.max_backtracks:
        pool = retrieve_candidates(spec, scenes, shots_by_id, used, level)
        trace.record(action="retrieve", spec=spec.id, level=level, pool=list(pool.shots))

        best: Optional[tuple[float, Clip, int]] = None
        for shot_id in pool.shots:
            shot = shots_by_id[shot_id]
            result = trim_shot(shot, spec, frame_scores.get(shot), aes_w, presence_w,
                               used, fps, frozenset(tried.get(shot_id, ())))
            if result is None:
                continue
            clip, score, start = result
            if best is None or score.combined > best[0] + 1e-12:
                best = (score.combined, clip, start)

        if best is None:
            if level < cfg.max_expansion:
                level += 1
                trace.record(action="expand", spec=spec.id, level=level)
                continue
            break  # fully exhausted

        combined, clip, start = best
        verdict = reviewer.review(clip, spec=spec,
                                  timeline=Timeline(clips=tuple(committed), music=music_id))
        if verdict.accepted:
            trace.record(action="review", spec=spec.id, shot=clip.origin_shot,
                         start_index=start, decision="accept")
            return clip

        backtracks += 1
        tried.setdefault(clip.origin_shot, set()).add(start)
        reasons = [r.criterion for r in verdict.reasons]
        trace.record(action="review", spec=spec.id, shot=clip.origin_shot,
                     start_index=start, decision="reject", reasons=reasons,
                     hard=any(r.hard for r in verdict.reasons))
        if not any(r.hard for r in verdict.reasons):
            if soft_fallback is None or combined > soft_fallback[0]:
                soft_fallback = (combined, clip)

    if soft_fallback is not None:
        log.warning("spec %s: committing best soft-rejected candidate after %d backtracks",
                    spec.id, backtracks)
        trace.record(action="forced_commit", spec=spec.id,
                     shot=soft_fallback[1].origin_shot, backtracks=backtracks)
        return soft_fallback[1]
    raise UnrecoverableSpecError(
        f"spec {spec.id}: no committable candidate in scene {spec.scene_id} "
        f"after {backtracks} backtracks at expansion level {cfg.max_expansion}"
    )
