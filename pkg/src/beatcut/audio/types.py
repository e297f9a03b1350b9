"""Audio-side domain types: keypoints, structural units, cue weights."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class KeypointKind(str, Enum):
    DOWNBEAT = "downbeat"
    PITCH_CHANGE = "pitch_change"
    ENERGY_CHANGE = "energy_change"


_KIND_INDEX = {KeypointKind.DOWNBEAT: 0, KeypointKind.PITCH_CHANGE: 1, KeypointKind.ENERGY_CHANGE: 2}


@dataclass(frozen=True)
class SoundKeypoint:
    """A perceptually salient musical time point, usable as a cut anchor.

    ``components`` holds the cue intensity of each kind (downbeat, pitch
    change, energy change) observed at this time; de-duplication folds
    nearby keypoints of other kinds into the survivor's components so the
    significance score can still see them.
    """

    t: float
    kind: KeypointKind
    intensity: float
    components: tuple[float, float, float] = (0.0, 0.0, 0.0)
    synthetic: bool = False  # inserted to break an over-long gap, not detected

    def __post_init__(self):
        if not (0.0 <= self.intensity <= 1.0):
            raise ValueError(f"keypoint intensity must be in [0, 1], got {self.intensity}")
        if self.components == (0.0, 0.0, 0.0) and not self.synthetic:
            comps = [0.0, 0.0, 0.0]
            comps[_KIND_INDEX[self.kind]] = self.intensity
            object.__setattr__(self, "components", tuple(comps))


@dataclass(frozen=True)
class MusicUnit:
    """A coarse structural section of the track (verse, chorus, ...)."""

    id: str
    start: float
    end: float
    label: str
    caption: str = ""
    keypoints: tuple[SoundKeypoint, ...] = ()

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"unit {self.id}: start must precede end ({self.start} >= {self.end})")
        if not self.label:
            raise ValueError(f"unit {self.id}: label must be non-empty")
        ts = [k.t for k in self.keypoints]
        if ts != sorted(ts):
            raise ValueError(f"unit {self.id}: keypoints must be sorted")
        if ts and (ts[0] <= self.start or ts[-1] >= self.end):
            raise ValueError(f"unit {self.id}: keypoints must lie strictly inside the unit")

    @property
    def length(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class KeypointWeights:
    """Cue weights for the keypoint significance score."""

    downbeat: float = 0.5
    pitch: float = 0.25
    energy: float = 0.25

    def __post_init__(self):
        terms = (self.downbeat, self.pitch, self.energy)
        if any(w < 0 for w in terms):
            raise ValueError(f"keypoint weights must be non-negative, got {terms}")
        if not sum(terms) > 0:
            raise ValueError("keypoint weights must not all be zero")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.downbeat, self.pitch, self.energy)
