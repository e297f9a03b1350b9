"""Audio-visual harmony: do the output cuts land on musical keypoints?

Cut times are measured on the output/music axis (cumulative clip
positions, excluding t=0 and the end): the metric's intent is that cuts
land on beats of the output audio, not anywhere in the source footage.
Every selected keypoint counts as a valid anchor; per-kind breakdowns
are reported alongside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .audio.types import KeypointKind, SoundKeypoint
from .core import Timeline


@dataclass(frozen=True)
class HarmonyReport:
    offsets: tuple[float, ...]      # per-cut minimum |cut - keypoint|
    aligned_fraction: float
    threshold: float
    cut_times: tuple[float, ...]
    per_kind: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "aligned_fraction": self.aligned_fraction,
            "cut_times": [round(t, 4) for t in self.cut_times],
            "offsets": [round(d, 4) if math.isfinite(d) else None for d in self.offsets],
            "per_kind": {k: round(v, 4) for k, v in sorted(self.per_kind.items())},
        }


def _min_offsets(cuts: Sequence[float], times: Sequence[float]) -> list[float]:
    if not times:
        return [math.inf] * len(cuts)
    ordered = sorted(times)
    return [min(abs(c - t) for t in ordered) for c in cuts]


def av_harmony(timeline: Timeline, keypoints: Sequence[SoundKeypoint],
               threshold: float = 0.1) -> HarmonyReport:
    """Fraction of interior cuts within ``threshold`` of a keypoint.

    Invariant to keypoint ordering and duplication. A single-clip
    timeline has no interior cuts and reports a vacuous fraction of 1.
    With no keypoints at all, every offset is infinite and the fraction
    is 0.
    """
    if not timeline.clips:
        raise ValueError("av_harmony requires a non-empty timeline")
    cuts = timeline.cut_times()
    offsets = _min_offsets(cuts, [k.t for k in keypoints])
    if not cuts:
        fraction = 1.0
    elif not keypoints:
        fraction = 0.0
    else:
        fraction = sum(1 for d in offsets if d <= threshold) / len(cuts)

    per_kind: dict[str, float] = {}
    if cuts:
        for kind in KeypointKind:
            kind_times = [k.t for k in keypoints if k.kind is kind]
            if not kind_times:
                continue
            kind_offsets = _min_offsets(cuts, kind_times)
            per_kind[kind.value] = sum(1 for d in kind_offsets if d <= threshold) / len(cuts)

    return HarmonyReport(
        offsets=tuple(offsets),
        aligned_fraction=fraction,
        threshold=threshold,
        cut_times=tuple(cuts),
        per_kind=per_kind,
    )


def harmony_sweep(timeline: Timeline, keypoints: Sequence[SoundKeypoint],
                  thresholds: Sequence[float]) -> list[HarmonyReport]:
    return [av_harmony(timeline, keypoints, t) for t in thresholds]
