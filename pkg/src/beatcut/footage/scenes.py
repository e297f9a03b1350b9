"""Scene aggregation: group adjacent shots by attribute similarity."""

from __future__ import annotations

from typing import Sequence

from .embedding import cosine
from .types import Scene, Shot, ShotAttributes, SimilarityWeights


def shot_similarity(a: ShotAttributes, b: ShotAttributes, w: SimilarityWeights) -> float:
    """Weighted attribute similarity in [0, 1].

    Each attribute contributes its embedding cosine mapped through
    (1 + cos) / 2, so orthogonal attributes score 0.5 and identical
    attributes score 1.0. Symmetric by construction.
    """
    if a.embeddings is None or b.embeddings is None:
        raise ValueError("shot attributes must carry embeddings")
    sims = [
        (1.0 + cosine(ea, eb)) / 2.0
        for ea, eb in zip(a.embeddings.as_ordered(), b.embeddings.as_ordered())
    ]
    return float(sum(wi * si for wi, si in zip(w.as_tuple(), sims)))


def aggregate_scenes(shots: Sequence[Shot], w: SimilarityWeights, tau: float) -> list[Scene]:
    """Partition shots (in source order) into contiguous scenes.

    A new scene starts whenever the similarity of an adjacent pair drops
    below ``tau``, or the source changes. Every shot lands in exactly one
    scene and order is preserved.
    """
    if not (0.0 < tau < 1.0):
        raise ValueError(f"tau must be inside (0, 1), got {tau}")
    if not shots:
        return []
    for s in shots:
        if s.attributes is None:
            raise ValueError(f"shot {s.id} has no attributes; caption shots first")

    groups: list[list[str]] = [[shots[0].id]]
    for prev, cur in zip(shots, shots[1:]):
        if cur.source != prev.source or shot_similarity(prev.attributes, cur.attributes, w) < tau:
            groups.append([cur.id])
        else:
            groups[-1].append(cur.id)
    return [Scene(id=f"z{i + 1:02d}", shots=tuple(g)) for i, g in enumerate(groups)]
