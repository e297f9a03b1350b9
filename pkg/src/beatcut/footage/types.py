"""Visual-side domain types: shots, attributes, scenes, identities."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


@dataclass(frozen=True)
class CharacterIdentity:
    """A named character inferred from dialogue; grounds captions."""

    name: str
    role: str = ""
    aliases: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.name:
            raise ValueError("character name must be non-empty")
        object.__setattr__(self, "aliases", tuple(self.aliases))


@dataclass(frozen=True)
class CharacterMention:
    name: str
    salience: float  # 0..1, how visually prominent in the shot

    def __post_init__(self):
        if not (0.0 <= self.salience <= 1.0):
            raise ValueError(f"salience must be in [0, 1], got {self.salience}")


@dataclass(frozen=True)
class AttributeEmbeddings:
    """Unit-normalized feature vectors, one per captioned attribute."""

    cinematography: tuple[float, ...]
    characters: tuple[float, ...]
    environment: tuple[float, ...]
    action: tuple[float, ...]

    def as_ordered(self) -> tuple[tuple[float, ...], ...]:
        return (self.cinematography, self.characters, self.environment, self.action)


@dataclass(frozen=True)
class ShotAttributes:
    cinematography: str
    shot_scale: str
    characters: tuple[CharacterMention, ...]
    environment: str
    action: str
    embeddings: Optional[AttributeEmbeddings] = None

    def __post_init__(self):
        object.__setattr__(self, "characters", tuple(self.characters))

    def describe(self) -> str:
        """One-line caption used for scene summaries and planning context."""
        names = ", ".join(c.name for c in self.characters) or "no one in particular"
        return f"{self.action} — {names} — {self.environment} ({self.cinematography})"


@dataclass(frozen=True)
class Shot:
    """Atomic visual unit bounded by camera cuts."""

    id: str
    source: str  # MediaRef id
    t_in: float
    t_out: float
    attributes: Optional[ShotAttributes] = None
    keyframes: tuple[float, ...] = ()  # sampled times on the source axis
    frame_paths: tuple[str, ...] = ()  # extracted images, parallel to keyframes

    def __post_init__(self):
        if not self.t_in < self.t_out:
            raise ValueError(f"shot {self.id}: t_in must precede t_out")
        object.__setattr__(self, "keyframes", tuple(self.keyframes))
        object.__setattr__(self, "frame_paths", tuple(self.frame_paths))
        if self.frame_paths and len(self.frame_paths) != len(self.keyframes):
            raise ValueError(f"shot {self.id}: frame paths must parallel the keyframe grid")

    @property
    def duration(self) -> float:
        return self.t_out - self.t_in


@dataclass(frozen=True)
class Scene:
    """A contiguous, semantically coherent run of shots."""

    id: str
    shots: tuple[str, ...]  # shot ids in source order
    summary: str = ""

    def __post_init__(self):
        object.__setattr__(self, "shots", tuple(self.shots))
        if not self.shots:
            raise ValueError(f"scene {self.id} must contain at least one shot")


@dataclass(frozen=True)
class SimilarityWeights:
    """Attribute weights for adjacent-shot similarity; must sum to 1."""

    cinematography: float = 0.25
    characters: float = 0.25
    environment: float = 0.25
    action: float = 0.25

    def __post_init__(self):
        terms = self.as_tuple()
        if any(w < 0 for w in terms):
            raise ValueError(f"similarity weights must be non-negative, got {terms}")
        if abs(sum(terms) - 1.0) > 1e-9:
            raise ValueError(f"similarity weights must sum to 1, got {sum(terms)}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.cinematography, self.characters, self.environment, self.action)
