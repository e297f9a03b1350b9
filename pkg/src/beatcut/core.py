"""Core data model, timeline arithmetic and hard-constraint validators.

All times are seconds (float). Clip in/out points live on the *source*
axis (position within a footage file); cumulative positions of clips in
the edit live on the *output* axis. Source intervals are half-open
[t_in, t_out): two clips that merely touch do not overlap.

Every type here is an immutable value, safe to share between threads;
the validators are pure functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Sequence


class MediaKind(str, Enum):
    VIDEO = "video"
    AUDIO = "audio"


class InstructionCategory(str, Enum):
    CHARACTER_CENTRIC = "character_centric"
    NARRATIVE_CENTRIC = "narrative_centric"
    UNSPECIFIED = "unspecified"


# Duration-fidelity tolerance: ~1 frame at 25 fps, comfortably under the
# 0.1 s perceptual alignment threshold used by the harmony metric.
DEFAULT_DURATION_TOLERANCE = 0.05


@dataclass(frozen=True)
class MediaRef:
    """A footage or music file known to the project."""

    id: str
    path: str
    duration: float  # seconds
    kind: MediaKind = MediaKind.VIDEO

    def __post_init__(self):
        if not self.id:
            raise ValueError("media id must be non-empty")
        if not (self.duration > 0):
            raise ValueError(f"media {self.id!r}: duration must be > 0, got {self.duration}")


@dataclass(frozen=True)
class Instruction:
    """Free-form editing brief, optionally naming a protagonist to follow."""

    text: str
    category: InstructionCategory = InstructionCategory.UNSPECIFIED
    protagonist: Optional[str] = None

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("instruction text must be non-empty")


@dataclass(frozen=True)
class Clip:
    """A continuous segment [t_in, t_out) extracted from one source."""

    source: str  # MediaRef id
    t_in: float
    t_out: float
    origin_shot: str = ""
    spec_id: str = ""

    def __post_init__(self):
        if not (0.0 <= self.t_in < self.t_out):
            raise ValueError(f"clip requires 0 <= t_in < t_out, got [{self.t_in}, {self.t_out})")

    @property
    def duration(self) -> float:
        return self.t_out - self.t_in


@dataclass(frozen=True)
class Timeline:
    """The ordered edit: clips played back to back over one music track."""

    clips: tuple[Clip, ...]
    music: str  # MediaRef id

    def __post_init__(self):
        object.__setattr__(self, "clips", tuple(self.clips))

    def cut_times(self) -> list[float]:
        """Interior cut positions on the output axis (excludes 0 and end)."""
        cuts, pos = [], 0.0
        for clip in self.clips[:-1]:
            pos += clip.duration
            cuts.append(pos)
        return cuts


@dataclass(frozen=True)
class ObjectiveWeights:
    """Non-negative weights for the four diagnostic quality terms."""

    visual: float = 1.0
    narrative: float = 1.0
    semantic: float = 1.0
    rhythm: float = 1.0

    def __post_init__(self):
        terms = (self.visual, self.narrative, self.semantic, self.rhythm)
        if any(w < 0 for w in terms):
            raise ValueError(f"objective weights must be non-negative, got {terms}")
        if not sum(terms) > 0:
            raise ValueError("objective weights must not all be zero")


@dataclass(frozen=True)
class Violation:
    """One validity breach found in a timeline. Violations are data, not errors."""

    kind: str  # "overlap" | "duration" | "clip"
    detail: str
    clip_indices: tuple[int, ...] = field(default=())


def timeline_duration(timeline: Timeline) -> float:
    """Total output duration: sum of clip durations."""
    return sum(c.duration for c in timeline.clips)


def validate_timeline(
    timeline: Timeline,
    music: MediaRef,
    tolerance: float = DEFAULT_DURATION_TOLERANCE,
    sources: Optional[Mapping[str, MediaRef]] = None,
) -> list[Violation]:
    """Check a final timeline against the hard structural constraints.

    Reports (a) source-interval overlap between any two clips drawn from the
    same source, (b) total duration drifting from the music length by more
    than ``tolerance``, and (c) any per-clip bound breach against the source
    duration (only checkable when ``sources`` is supplied). The result is
    invariant under clip reordering, up to the indices used to name clips.
    """
    if not timeline.clips:
        raise ValueError("validate_timeline requires a non-empty timeline")

    violations: list[Violation] = []

    by_source: dict[str, list[int]] = {}
    for i, clip in enumerate(timeline.clips):
        by_source.setdefault(clip.source, []).append(i)

    for src, indices in by_source.items():
        ordered = sorted(indices, key=lambda i: (timeline.clips[i].t_in, timeline.clips[i].t_out, i))
        for a_pos, i in enumerate(ordered):
            ci = timeline.clips[i]
            for j in ordered[a_pos + 1:]:
                cj = timeline.clips[j]
                if cj.t_in >= ci.t_out:
                    break  # sorted by t_in: nothing later can reach back into ci
                pair = tuple(sorted((i, j)))
                overlap = min(ci.t_out, cj.t_out) - cj.t_in
                violations.append(Violation(
                    kind="overlap",
                    detail=f"clips {pair[0]} and {pair[1]} overlap by {overlap:.3f}s in source {src!r}",
                    clip_indices=pair,
                ))

    total = timeline_duration(timeline)
    if abs(total - music.duration) > tolerance:
        violations.append(Violation(
            kind="duration",
            detail=f"timeline lasts {total:.3f}s but music lasts {music.duration:.3f}s "
                   f"(tolerance {tolerance}s)",
        ))

    if sources is not None:
        for i, clip in enumerate(timeline.clips):
            ref = sources.get(clip.source)
            if ref is None:
                violations.append(Violation("clip", f"clip {i} references unknown source {clip.source!r}", (i,)))
            elif clip.t_out > ref.duration + 1e-9:
                violations.append(Violation(
                    "clip",
                    f"clip {i} ends at {clip.t_out:.3f}s beyond source duration {ref.duration:.3f}s",
                    (i,),
                ))

    return violations


def objective_score(
    visual: float,
    narrative: float,
    semantic: float,
    rhythm: float,
    weights: ObjectiveWeights,
) -> float:
    """Weighted sum of the four quality terms, each in [0, 1].

    This is a diagnostic report value only: the pipeline never searches
    over it directly, it realizes the maximization through the staged
    plan / retrieve / review procedure.
    """
    terms = (visual, narrative, semantic, rhythm)
    for name, q in zip(("visual", "narrative", "semantic", "rhythm"), terms):
        if math.isnan(q) or not (0.0 <= q <= 1.0):
            raise ValueError(f"{name} quality must be in [0, 1], got {q}")
    return (weights.visual * visual + weights.narrative * narrative
            + weights.semantic * semantic + weights.rhythm * rhythm)


def intervals_overlap(a_in: float, a_out: float, b_in: float, b_out: float) -> bool:
    """Half-open interval intersection test shared by validators."""
    return a_in < b_out and b_in < a_out
