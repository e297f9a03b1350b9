"""Staged pipeline orchestration with resumable, cached artifacts.

Stages: deconstruct -> parse-audio -> plan -> edit -> render -> eval.
Each stage writes one JSON artifact keyed by a hash of its inputs and
config; re-running with unchanged inputs is a cache hit and performs no
work (in particular, no provider calls). Artifacts are the API between
stages, so any stage can be re-run or inspected in isolation.
"""

from __future__ import annotations

import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Optional, Sequence

from .artifacts import ArtifactStore, content_key, file_key
from .audio.keypoints import detect_all_keypoints, filter_keypoints, select_unit_keypoints
from .audio.structure import segment_structure
from .audio.types import KeypointKind, KeypointWeights, MusicUnit, SoundKeypoint
from .audio.wavio import load_audio
from .config import PipelineConfig
from .core import Clip, MediaRef, Timeline, timeline_duration, validate_timeline
from .editor import EditTrace, FrameScores, edit_loop
from .footage.captions import attach_embeddings, caption_shot, infer_identities, summarize_scene
from .footage.scenes import aggregate_scenes
from .footage.shots import detect_shots, extract_keyframes
from .footage.srt import load_srt
from .footage.types import (
    CharacterIdentity,
    CharacterMention,
    Scene,
    Shot,
    ShotAttributes,
    SimilarityWeights,
)
from .manifest import ManifestError, Project
from .metrics import av_harmony, harmony_sweep
from .planner import ShotSpec, allocate_scenes, plan_shots
from .provider import HttpProvider, MockProvider, Provider, Sidecar
from .render import ToolMissingError, export_edl, parse_edl, render_video
from .reviewer import NullFrameStats, Reviewer, SidecarFrameStats, VideoFrameStats

log = logging.getLogger("beatcut.pipeline")

# stage name (CLI-facing) -> artifact file name
STAGE_ARTIFACTS = {
    "deconstruct": "deconstruction",
    "parse-audio": "audio",
    "plan": "plan",
    "edit": "timeline",
    "render": "edl",
    "eval": "harmony",
}


class StageDependencyError(RuntimeError):
    """A required upstream artifact is missing."""

    def __init__(self, stage: str):
        super().__init__(f"missing artifact for stage {stage!r}; run `beatcut {stage}` first")
        self.stage = stage


# --------------------------------------------------------------------------
# artifact (de)serialization
# --------------------------------------------------------------------------


def _attrs_to_dict(attrs: ShotAttributes) -> dict:
    return {
        "cinematography": attrs.cinematography,
        "shot_scale": attrs.shot_scale,
        "characters": [{"name": c.name, "salience": c.salience} for c in attrs.characters],
        "environment": attrs.environment,
        "action": attrs.action,
    }


def _attrs_from_dict(d: dict, embed_dim: int) -> ShotAttributes:
    attrs = ShotAttributes(
        cinematography=d["cinematography"],
        shot_scale=d["shot_scale"],
        characters=tuple(CharacterMention(c["name"], c["salience"]) for c in d["characters"]),
        environment=d["environment"],
        action=d["action"],
    )
    # Embeddings are a pure function of the text; recomputing keeps
    # artifacts small and human-readable.
    return attach_embeddings(attrs, embed_dim)


def _shot_to_dict(shot: Shot) -> dict:
    return {
        "id": shot.id,
        "source": shot.source,
        "t_in": shot.t_in,
        "t_out": shot.t_out,
        "keyframes": list(shot.keyframes),
        "frame_paths": list(shot.frame_paths),
        "attributes": _attrs_to_dict(shot.attributes) if shot.attributes else None,
    }


def _shot_from_dict(d: dict, embed_dim: int) -> Shot:
    return Shot(
        id=d["id"],
        source=d["source"],
        t_in=d["t_in"],
        t_out=d["t_out"],
        keyframes=tuple(d["keyframes"]),
        frame_paths=tuple(d.get("frame_paths", ())),
        attributes=_attrs_from_dict(d["attributes"], embed_dim) if d["attributes"] else None,
    )


def _keypoint_to_dict(k: SoundKeypoint) -> dict:
    return {"t": k.t, "kind": k.kind.value, "intensity": k.intensity,
            "components": list(k.components), "synthetic": k.synthetic}


def _keypoint_from_dict(d: dict) -> SoundKeypoint:
    return SoundKeypoint(t=d["t"], kind=KeypointKind(d["kind"]), intensity=d["intensity"],
                         components=tuple(d["components"]), synthetic=d["synthetic"])


def _unit_to_dict(u: MusicUnit) -> dict:
    return {"id": u.id, "start": u.start, "end": u.end, "label": u.label,
            "caption": u.caption, "keypoints": [_keypoint_to_dict(k) for k in u.keypoints]}


def _unit_from_dict(d: dict) -> MusicUnit:
    return MusicUnit(id=d["id"], start=d["start"], end=d["end"], label=d["label"],
                     caption=d["caption"],
                     keypoints=tuple(_keypoint_from_dict(k) for k in d["keypoints"]))


def _spec_to_dict(s: ShotSpec) -> dict:
    return {"id": s.id, "unit_id": s.unit_id, "duration": s.duration,
            "scene_id": s.scene_id, "description": s.description, "slot_start": s.slot_start}


def _spec_from_dict(d: dict) -> ShotSpec:
    return ShotSpec(id=d["id"], unit_id=d["unit_id"], duration=d["duration"],
                    scene_id=d["scene_id"], description=d["description"],
                    slot_start=d["slot_start"])


def _timeline_to_dict(timeline: Timeline) -> dict:
    return {
        "music": timeline.music,
        "duration": timeline_duration(timeline),
        "clips": [
            {"source": c.source, "t_in": c.t_in, "t_out": c.t_out,
             "origin_shot": c.origin_shot, "spec_id": c.spec_id}
            for c in timeline.clips
        ],
    }


def _timeline_from_dict(d: dict) -> Timeline:
    return Timeline(
        clips=tuple(Clip(source=c["source"], t_in=c["t_in"], t_out=c["t_out"],
                         origin_shot=c["origin_shot"], spec_id=c["spec_id"])
                    for c in d["clips"]),
        music=d["music"],
    )


def selected_grid(units: Sequence[MusicUnit]) -> list[SoundKeypoint]:
    """The full cut grid: unit-interior keypoints plus interior unit bounds."""
    grid: list[SoundKeypoint] = []
    for i, unit in enumerate(units):
        if i > 0:
            grid.append(SoundKeypoint(t=unit.start, kind=KeypointKind.ENERGY_CHANGE,
                                      intensity=0.0, synthetic=True))
        grid.extend(unit.keypoints)
    grid.sort(key=lambda k: k.t)
    return grid


# --------------------------------------------------------------------------
# the pipeline
# --------------------------------------------------------------------------


class Pipeline:
    def __init__(self, project: Project, provider: Optional[Provider] = None):
        self.project = project
        self.cfg: PipelineConfig = project.config
        self.store = ArtifactStore(project.artifacts_dir)
        self.sidecar: Optional[Sidecar] = None
        if project.sidecar_path and Path(project.sidecar_path).exists():
            self.sidecar = Sidecar.load(project.sidecar_path)
        self.provider = provider if provider is not None else self._build_provider()

    def _build_provider(self) -> Provider:
        kind = self.cfg.provider.kind
        if kind == "mock":
            return MockProvider(self.sidecar, self.cfg.provider)
        if kind == "http":
            return HttpProvider(self.cfg.provider)
        raise ManifestError(f"unknown provider kind {kind!r}")

    # -- helpers ------------------------------------------------------------

    def _file_fingerprint(self, path: Optional[Path], fallback: Any = None) -> Any:
        if path is not None and Path(path).exists():
            return file_key(path)
        return fallback

    def _require(self, stage: str) -> dict:
        doc = self.store.read(STAGE_ARTIFACTS[stage])
        if doc is None:
            raise StageDependencyError(stage)
        return doc

    def _cached_or(self, artifact: str, key: str, force: bool, compute) -> Any:
        if not force:
            hit = self.store.cached(artifact, key)
            if hit is not None:
                log.info("%s: cache hit", artifact)
                return hit
        data = compute()
        self.store.write(artifact, key, data)
        return data

    def _target(self, roster: Sequence[CharacterIdentity]) -> Optional[str]:
        wanted = self.project.instruction.protagonist
        if wanted and any(i.name == wanted for i in roster):
            return wanted
        if wanted:
            log.warning("protagonist %r not in inferred roster; identity gate is vacuous", wanted)
        return None

    # -- stages -------------------------------------------------------------

    def deconstruct(self, force: bool = False) -> dict:
        p = self.project
        fc = self.cfg.footage
        key = content_key({
            "stage": "deconstruct",
            "config": dataclasses.asdict(fc),
            "provider": self.cfg.provider.kind,
            "footage": self._file_fingerprint(Path(p.footage.path), p.footage.duration),
            "boundaries": self._file_fingerprint(p.shot_boundaries_path),
            "subtitles": self._file_fingerprint(p.subtitles_path),
            "sidecar": self._file_fingerprint(p.sidecar_path),
        })

        def compute() -> dict:
            shots = detect_shots(p.footage, fc, boundary_sidecar=p.shot_boundaries_path)
            log.info("deconstruct: %d shots", len(shots))
            # Image-taking providers need real pixels; the mock never does.
            if self.cfg.provider.kind == "http" and Path(p.footage.path).exists():
                frames_dir = Path(p.artifacts_dir) / "frames"
                shots = [
                    dataclasses.replace(s, frame_paths=extract_keyframes(
                        p.footage.path, s, frames_dir, fc.short_side))
                    for s in shots
                ]
            subtitles = load_srt(p.subtitles_path) if p.subtitles_path else []
            roster = infer_identities(subtitles, self.provider)
            log.info("deconstruct: roster %s", [i.name for i in roster] or "(anonymous)")
            with ThreadPoolExecutor(max_workers=self.cfg.provider.concurrency) as pool:
                attrs = list(pool.map(
                    lambda s: caption_shot(s, self.provider, roster, fc), shots))
            shots = [dataclasses.replace(s, attributes=a) for s, a in zip(shots, attrs)]
            weights = SimilarityWeights(fc.sim_cinematography, fc.sim_characters,
                                        fc.sim_environment, fc.sim_action)
            scenes = aggregate_scenes(shots, weights, fc.scene_tau)
            shots_by_id = {s.id: s for s in shots}
            scenes = [
                dataclasses.replace(
                    scene, summary=summarize_scene(scene, shots_by_id, self.provider, roster))
                for scene in scenes
            ]
            log.info("deconstruct: %d scenes", len(scenes))
            return {
                "roster": [{"name": i.name, "role": i.role, "aliases": list(i.aliases)}
                           for i in roster],
                "shots": [_shot_to_dict(s) for s in shots],
                "scenes": [{"id": z.id, "shots": list(z.shots), "summary": z.summary}
                           for z in scenes],
            }

        return self._cached_or("deconstruction", key, force, compute)

    def parse_audio(self, force: bool = False) -> dict:
        p = self.project
        ac = self.cfg.audio
        key = content_key({
            "stage": "parse-audio",
            "config": dataclasses.asdict(ac),
            "provider": self.cfg.provider.kind,
            "music": self._file_fingerprint(Path(p.music.path)),
            "sidecar": self._file_fingerprint(p.sidecar_path),
        })

        def compute() -> dict:
            samples, sr = load_audio(p.music.path, ac.sample_rate)
            pool = detect_all_keypoints(samples, sr, ac)
            filtered = filter_keypoints(pool, ac.filter_window)
            log.info("parse-audio: %d keypoints after filtering (%d raw)", len(filtered), len(pool))
            units = segment_structure(samples, sr, self.provider, filtered, ac)
            weights = KeypointWeights(ac.weight_downbeat, ac.weight_pitch, ac.weight_energy)
            units = [
                dataclasses.replace(u, keypoints=tuple(
                    select_unit_keypoints(u, filtered, weights, ac.min_gap, ac.max_gap)))
                for u in units
            ]
            log.info("parse-audio: %d units, %d slots", len(units),
                     sum(len(u.keypoints) + 1 for u in units))
            return {
                "keypoints": [_keypoint_to_dict(k) for k in filtered],
                "units": [_unit_to_dict(u) for u in units],
                "grid": [_keypoint_to_dict(k) for k in selected_grid(units)],
            }

        return self._cached_or("audio", key, force, compute)

    def plan(self, force: bool = False) -> dict:
        dec = self._require("deconstruct")
        audio = self._require("parse-audio")
        instruction = self.project.instruction
        key = content_key({
            "stage": "plan",
            "config": dataclasses.asdict(self.cfg.planner),
            "instruction": [instruction.text, instruction.category.value,
                            instruction.protagonist],
            "deps": [dec["key"], audio["key"]],
        })

        def compute() -> dict:
            scenes = [Scene(id=z["id"], shots=tuple(z["shots"]), summary=z["summary"])
                      for z in dec["data"]["scenes"]]
            units = [_unit_from_dict(u) for u in audio["data"]["units"]]
            proposal = allocate_scenes(units, scenes, instruction, self.provider,
                                       self.cfg.planner)
            scenes_by_id = {z.id: z for z in scenes}
            assigned_map = proposal.as_map()

            def plan_unit(unit: MusicUnit) -> list[ShotSpec]:
                assigned = [scenes_by_id[sid] for sid in assigned_map[unit.id]]
                return plan_shots(unit, assigned, instruction, self.provider,
                                  self.cfg.planner, self.cfg.footage.embed_dim)

            with ThreadPoolExecutor(max_workers=self.cfg.provider.concurrency) as pool:
                per_unit = list(pool.map(plan_unit, units))
            specs = [spec for unit_specs in per_unit for spec in unit_specs]
            specs.sort(key=lambda s: s.slot_start)
            log.info("plan: %d specs across %d units", len(specs), len(units))
            return {
                "storyline": proposal.storyline,
                "assignments": [{"unit_id": a.unit_id, "scene_ids": list(a.scene_ids)}
                                for a in proposal.assignments],
                "specs": [_spec_to_dict(s) for s in specs],
            }

        return self._cached_or("plan", key, force, compute)

    def edit(self, force: bool = False) -> dict:
        dec = self._require("deconstruct")
        plan = self._require("plan")
        key = content_key({
            "stage": "edit",
            "config": {
                "editor": dataclasses.asdict(self.cfg.editor),
                "reviewer": dataclasses.asdict(self.cfg.reviewer),
                "tolerance": self.cfg.core.duration_tolerance,
            },
            "deps": [dec["key"], plan["key"]],
        })

        def compute() -> dict:
            embed_dim = self.cfg.footage.embed_dim
            shots = [_shot_from_dict(s, embed_dim) for s in dec["data"]["shots"]]
            shots_by_id = {s.id: s for s in shots}
            scenes = [Scene(id=z["id"], shots=tuple(z["shots"]), summary=z["summary"])
                      for z in dec["data"]["scenes"]]
            roster = [CharacterIdentity(r["name"], r["role"], tuple(r["aliases"]))
                      for r in dec["data"]["roster"]]
            specs = [_spec_from_dict(s) for s in plan["data"]["specs"]]
            target = self._target(roster)

            if self.sidecar is not None:
                frame_stats = SidecarFrameStats(self.sidecar)
            elif Path(self.project.footage.path).exists():
                frame_stats = VideoFrameStats()
            else:
                frame_stats = NullFrameStats()
            reviewer = Reviewer(
                provider=self.provider, shots_by_id=shots_by_id, roster=roster,
                target=target, config=self.cfg.reviewer, frame_stats=frame_stats,
                duration_tolerance=self.cfg.core.duration_tolerance,
            )
            frame_scores = FrameScores(self.provider, target)
            trace = EditTrace()
            timeline = edit_loop(
                specs, scenes, shots_by_id, reviewer, frame_scores,
                music_id=self.project.music.id, config=self.cfg.editor,
                category=self.project.instruction.category,
                fps=self.cfg.footage.keyframe_fps, trace=trace,
            )
            violations = validate_timeline(
                timeline, self.project.music, self.cfg.core.duration_tolerance,
                {self.project.footage.id: self.project.footage},
            )
            if violations:
                log.warning("edit: timeline has %d violations", len(violations))
            self.store.write("trace", key, {
                "events": trace.events,
                "violations": [{"kind": v.kind, "detail": v.detail,
                                "clips": list(v.clip_indices)} for v in violations],
            })
            log.info("edit: %d clips, %.3fs total", len(timeline.clips),
                     timeline_duration(timeline))
            return _timeline_to_dict(timeline)

        return self._cached_or("timeline", key, force, compute)

    def render(self, force: bool = False, no_render: bool = False) -> dict:
        timeline_doc = self._require("edit")
        key = content_key({
            "stage": "render",
            "deps": [timeline_doc["key"]],
            "tolerance": self.cfg.core.duration_tolerance,
        })
        timeline = _timeline_from_dict(timeline_doc["data"])
        sources = {self.project.footage.id: self.project.footage}
        edl = export_edl(timeline, sources, self.project.music,
                         self.cfg.core.duration_tolerance)
        self.store.write("edl", key, edl)
        log.info("render: EDL with %d entries written", len(edl["entries"]))

        report: dict[str, Any] = {"rendered": False, "output": None}
        if no_render:
            report["reason"] = "rendering disabled (--no-render)"
        else:
            output = Path(self.project.artifacts_dir) / "output.mp4"
            try:
                render_video(edl, output)
                report = {"rendered": True, "output": str(output)}
                log.info("render: wrote %s", output)
            except ToolMissingError as exc:
                report["reason"] = f"media tool unavailable: {exc}; EDL-only mode"
                log.warning("render: %s", report["reason"])
        self.store.write("render", key, report)
        return report

    def evaluate(self, force: bool = False) -> dict:
        timeline_doc = self._require("edit")
        audio = self._require("parse-audio")
        key = content_key({
            "stage": "eval",
            "config": dataclasses.asdict(self.cfg.eval),
            "deps": [timeline_doc["key"], audio["key"]],
        })

        def compute() -> dict:
            timeline = _timeline_from_dict(timeline_doc["data"])
            grid = [_keypoint_from_dict(k) for k in audio["data"]["grid"]]
            primary = av_harmony(timeline, grid, self.cfg.eval.harmony_threshold)
            sweep = harmony_sweep(timeline, grid, self.cfg.eval.sweep_thresholds)
            csv_path = Path(self.project.artifacts_dir) / "harmony_sweep.csv"
            csv_path.write_text(
                "threshold,aligned_fraction\n"
                + "".join(f"{r.threshold},{r.aligned_fraction:.6f}\n" for r in sweep),
                encoding="utf-8",
            )
            log.info("eval: aligned %.3f at %.2fs", primary.aligned_fraction,
                     primary.threshold)
            return {"primary": primary.to_dict(), "sweep": [r.to_dict() for r in sweep]}

        return self._cached_or("harmony", key, force, compute)

    # -- all stages ---------------------------------------------------------

    def run(self, force: bool = False, plan_only: bool = False,
            no_render: bool = False) -> dict:
        self.deconstruct(force=force)
        self.parse_audio(force=force)
        plan = self.plan(force=force)
        if plan_only:
            return {"plan": plan}
        timeline = self.edit(force=force)
        render_report = self.render(force=force, no_render=no_render)
        harmony = self.evaluate(force=force)
        return {"timeline": timeline, "render": render_report, "harmony": harmony}
