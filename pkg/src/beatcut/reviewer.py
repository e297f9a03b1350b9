"""Multi-criteria validity gate over candidate clips.

Order of checks: structural integrity first (overlap with committed
material, duration fidelity) — these are hard and short-circuit; then
identity presence and perceptual quality, which are soft and aggregate.
A provider outage during a soft check converts to a rejection (the gate
is conservative by design), never to a blind accept.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .config import ReviewerConfig
from .core import Clip, Timeline, intervals_overlap
from .footage.types import CharacterIdentity, Shot
from .planner import ShotSpec
from .provider.base import (
    Attachment,
    AttachmentKind,
    ModelRequest,
    Provider,
    ProviderError,
    Task,
    render_prompt,
)

_IDENTITY_PROMPT = (
    "Is the target character visibly present AND salient in this frame "
    "(not a background extra, not occluded, not unrecognizable)?"
)

_QUALITY_PROMPT = (
    "Rate this clip's perceptual quality in [0,1]: exposure, stability, "
    "sharpness, absence of artifacts."
)


class Criterion(str, Enum):
    IDENTITY = "identity"
    OVERLAP = "overlap"
    DURATION = "duration"
    QUALITY = "quality"


_ALWAYS_HARD = {Criterion.OVERLAP, Criterion.DURATION}


@dataclass(frozen=True)
class ReviewReason:
    criterion: Criterion
    detail: str
    hard: bool

    def __post_init__(self):
        if self.criterion in _ALWAYS_HARD and not self.hard:
            raise ValueError(f"{self.criterion.value} violations are always hard")


@dataclass(frozen=True)
class ReviewVerdict:
    decision: str  # "accept" | "reject"
    reasons: tuple[ReviewReason, ...]
    presence_ratio: float

    def __post_init__(self):
        object.__setattr__(self, "reasons", tuple(self.reasons))
        if self.decision == "reject" and not self.reasons:
            raise ValueError("a rejection must carry at least one reason")
        if self.decision == "accept" and self.reasons:
            raise ValueError("an acceptance must carry no reasons")

    @property
    def accepted(self) -> bool:
        return self.decision == "accept"


class FrameStatsSource:
    """Per-frame (mean luma, variance) for the intrinsic quality heuristics."""

    def stats(self, shot_id: str, source_path: str, times: Sequence[float]) -> Optional[list[tuple[float, float]]]:
        raise NotImplementedError


class NullFrameStats(FrameStatsSource):
    """No pixel data available: heuristics are skipped."""

    def stats(self, shot_id, source_path, times):
        return None


class SidecarFrameStats(FrameStatsSource):
    """Luma/variance from the synthetic ground-truth sidecar."""

    def __init__(self, sidecar):
        self.sidecar = sidecar

    def stats(self, shot_id, source_path, times):
        out = []
        for t in times:
            frame = self.sidecar.frame(shot_id, t)
            if frame is None or "luma" not in frame:
                return None
            out.append((float(frame["luma"]), float(frame.get("variance", 0.0))))
        return out or None


class VideoFrameStats(FrameStatsSource):
    """Luma/variance decoded from the actual video frames."""

    def stats(self, shot_id, source_path, times):
        import cv2

        cap = cv2.VideoCapture(source_path)
        if not cap.isOpened():
            return None
        out = []
        try:
            for t in times:
                cap.set(cv2.CAP_PROP_POS_MSEC, t * 1000.0)
                ok, frame = cap.read()
                if not ok:
                    return None
                gray = cv2.cvtColor(frame, cv2.COLOR_BGR2GRAY).astype(np.float64) / 255.0
                out.append((float(gray.mean()), float(gray.var())))
        finally:
            cap.release()
        return out or None


def clip_keyframe_times(clip: Clip, shot: Shot) -> list[float]:
    return [t for t in shot.keyframes if clip.t_in - 1e-9 <= t < clip.t_out - 1e-9]


class Reviewer:
    """Audits candidate clips and returns structured verdicts."""

    def __init__(
        self,
        provider: Provider,
        shots_by_id: dict[str, Shot],
        roster: Sequence[CharacterIdentity] = (),
        target: Optional[str] = None,
        config: Optional[ReviewerConfig] = None,
        frame_stats: Optional[FrameStatsSource] = None,
        duration_tolerance: float = 0.05,
    ):
        self.provider = provider
        self.shots_by_id = shots_by_id
        self.roster = tuple(roster)
        self.target = target or None
        self.config = config or ReviewerConfig()
        self.frame_stats = frame_stats or NullFrameStats()
        self.duration_tolerance = duration_tolerance
        if self.target and all(i.name != self.target for i in self.roster):
            raise ValueError(f"target {self.target!r} is not in the roster")

    # -- identity -----------------------------------------------------------

    def _frame_present(self, shot_id: str, t: float) -> bool:
        payload = {"shot_id": shot_id, "times": [round(t, 3)]}
        shot = self.shots_by_id.get(shot_id)
        if shot is not None and shot.frame_paths:
            nearest = min(range(len(shot.keyframes)), key=lambda i: abs(shot.keyframes[i] - t))
            payload["paths"] = [shot.frame_paths[nearest]]
        request = ModelRequest(
            task=Task.IDENTITY_CHECK,
            prompt=render_prompt(_IDENTITY_PROMPT, {
                "shot_id": shot_id, "t": round(t, 3), "target": self.target,
            }),
            attachments=(Attachment(AttachmentKind.FRAMES, payload),),
        )
        parsed = self.provider.complete(request).parsed
        return bool(parsed["present"] and parsed["salient"])

    def verify_identity(self, clip: Clip, min_ratio: Optional[float] = None) -> tuple[float, bool]:
        """Protagonist presence ratio via hierarchical sampling.

        Probes a few evenly spaced frames first; only a split probe pays
        for sampling every keyframe. No target means a vacuous pass.
        """
        if self.target is None:
            return 1.0, True
        threshold = self.config.min_presence_ratio if min_ratio is None else min_ratio
        shot = self.shots_by_id[clip.origin_shot]
        times = clip_keyframe_times(clip, shot)
        if not times:
            return 0.0, False
        n = len(times)
        probe_n = min(self.config.probe_frames, n)
        probe_idx = sorted({int(round(i * (n - 1) / max(1, probe_n - 1))) for i in range(probe_n)})
        results: dict[int, bool] = {i: self._frame_present(clip.origin_shot, times[i])
                                    for i in probe_idx}
        votes = set(results.values())
        if len(votes) == 1:
            ratio = 1.0 if votes == {True} else 0.0
            return ratio, ratio >= threshold
        for i in range(n):
            if i not in results:
                results[i] = self._frame_present(clip.origin_shot, times[i])
        ratio = sum(results.values()) / n
        return ratio, ratio >= threshold

    # -- integrity ----------------------------------------------------------

    def verify_integrity(self, clip: Clip, committed: Timeline, spec: ShotSpec,
                         tolerance: Optional[float] = None) -> list[ReviewReason]:
        tol = self.duration_tolerance if tolerance is None else tolerance
        reasons = []
        for i, other in enumerate(committed.clips):
            if other.source == clip.source and intervals_overlap(
                    clip.t_in, clip.t_out, other.t_in, other.t_out):
                reasons.append(ReviewReason(
                    Criterion.OVERLAP,
                    f"overlaps committed clip {i} [{other.t_in:.3f}, {other.t_out:.3f}) "
                    f"in source {clip.source!r}",
                    hard=True,
                ))
        if abs(clip.duration - spec.duration) > tol:
            reasons.append(ReviewReason(
                Criterion.DURATION,
                f"clip lasts {clip.duration:.3f}s but the slot requires "
                f"{spec.duration:.3f}s (tolerance {tol}s)",
                hard=True,
            ))
        return reasons

    # -- quality ------------------------------------------------------------

    def verify_quality(self, clip: Clip, min_quality: Optional[float] = None) -> list[ReviewReason]:
        threshold = self.config.min_quality if min_quality is None else min_quality
        shot = self.shots_by_id[clip.origin_shot]
        times = clip_keyframe_times(clip, shot)
        stats = self.frame_stats.stats(clip.origin_shot, "", times) if times else None
        if stats:
            mean_luma = sum(s[0] for s in stats) / len(stats)
            mean_var = sum(s[1] for s in stats) / len(stats)
            if not (self.config.luma_floor <= mean_luma <= self.config.luma_ceil):
                return [ReviewReason(Criterion.QUALITY,
                                     f"mean luma {mean_luma:.3f} outside "
                                     f"[{self.config.luma_floor}, {self.config.luma_ceil}]",
                                     hard=False)]
            if mean_var < self.config.variance_floor:
                return [ReviewReason(Criterion.QUALITY,
                                     f"frame variance {mean_var:.5f} indicates frozen frames",
                                     hard=False)]
        payload = {"shot_id": clip.origin_shot, "times": [round(t, 3) for t in times]}
        if shot.frame_paths:
            payload["paths"] = [shot.frame_paths[i] for i, t in enumerate(shot.keyframes)
                                if t in set(times)]
        request = ModelRequest(
            task=Task.QUALITY_CHECK,
            prompt=render_prompt(_QUALITY_PROMPT, {
                "shot_id": clip.origin_shot,
                "t_in": round(clip.t_in, 3),
                "t_out": round(clip.t_out, 3),
            }),
            attachments=(Attachment(AttachmentKind.FRAMES, payload),),
        )
        parsed = self.provider.complete(request).parsed
        score = float(parsed["score"])
        if score < threshold:
            detail = parsed.get("detail", "")
            return [ReviewReason(Criterion.QUALITY,
                                 f"rubric score {score:.2f} below {threshold} ({detail})",
                                 hard=False)]
        return []

    # -- the gate -----------------------------------------------------------

    def review(self, clip: Clip, spec: ShotSpec, timeline: Timeline) -> ReviewVerdict:
        hard = self.verify_integrity(clip, timeline, spec)
        if hard:
            return ReviewVerdict(decision="reject", reasons=tuple(hard), presence_ratio=0.0)

        reasons: list[ReviewReason] = []
        ratio = 1.0
        try:
            ratio, passed = self.verify_identity(clip)
            if not passed:
                reasons.append(ReviewReason(
                    Criterion.IDENTITY,
                    f"presence ratio {ratio:.2f} below {self.config.min_presence_ratio}",
                    hard=False,
                ))
        except ProviderError:
            ratio = 0.0
            reasons.append(ReviewReason(Criterion.IDENTITY, "provider unavailable", hard=False))
        try:
            reasons.extend(self.verify_quality(clip))
        except ProviderError:
            reasons.append(ReviewReason(Criterion.QUALITY, "provider unavailable", hard=False))

        if reasons:
            return ReviewVerdict(decision="reject", reasons=tuple(reasons), presence_ratio=ratio)
        return ReviewVerdict(decision="accept", reasons=(), presence_ratio=ratio)
