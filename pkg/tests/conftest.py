"""Shared fixtures and test helpers."""

from __future__ import annotations

import numpy as np
import pytest

# Pass/fail scoreboard filled by the acceptance suite; printed in the
# terminal summary so a plain pytest run shows one line per criterion.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

from beatcut.footage.types import (
    AttributeEmbeddings,
    CharacterMention,
    Shot,
    ShotAttributes,
)
from beatcut.provider.mock import Sidecar
from beatcut.synth import generate_synthetic_project

SR = 22050


@pytest.fixture(scope="session")
def synthetic_project(tmp_path_factory):
    """One shared seed-fixed project for the expensive end-to-end tests."""
    root = tmp_path_factory.mktemp("synthproj")
    return generate_synthetic_project(root, seed=7)


def unit_vector(dim: int, axis: int) -> tuple[float, ...]:
    v = [0.0] * dim
    v[axis] = 1.0
    return tuple(v)


def embeddings_with_cosines(adjacent_cosines: list[float], dim: int = 8) -> list[tuple[float, ...]]:
    """Vector chain v_0..v_n with cos(v_i, v_{i+1}) as requested.

    Each step rotates within the plane spanned by the current vector and
    a fresh orthogonal direction, so only adjacent cosines are controlled.
    """
    assert len(adjacent_cosines) + 1 <= dim, "need one fresh dimension per step"
    vecs = [np.zeros(dim)]
    vecs[0][0] = 1.0
    for i, c in enumerate(adjacent_cosines):
        fresh = np.zeros(dim)
        fresh[i + 1] = 1.0
        fresh -= fresh.dot(vecs[-1]) * vecs[-1]
        fresh /= np.linalg.norm(fresh)
        nxt = c * vecs[-1] + np.sqrt(max(0.0, 1.0 - c * c)) * fresh
        vecs.append(nxt / np.linalg.norm(nxt))
    return [tuple(float(x) for x in v) for v in vecs]


def shot_with_embedding(shot_id: str, vec: tuple[float, ...], t_in: float, t_out: float,
                        source: str = "src") -> Shot:
    """A shot whose four attribute embeddings all equal ``vec``."""
    attrs = ShotAttributes(
        cinematography="c", shot_scale="medium",
        characters=(CharacterMention("x", 1.0),),
        environment="e", action="a",
        embeddings=AttributeEmbeddings(vec, vec, vec, vec),
    )
    return Shot(id=shot_id, source=source, t_in=t_in, t_out=t_out, attributes=attrs,
                keyframes=tuple(np.arange(t_in, t_out - 1e-9, 0.5)))


def make_sidecar(shots: dict, roster: list | None = None, music: dict | None = None) -> Sidecar:
    return Sidecar({"shots": shots, "roster": roster or [], "music": music or {}})


def sidecar_shot(t_in: float, t_out: float, frames: list[dict], quality: float = 0.9,
                 attributes: dict | None = None) -> dict:
    return {
        "t_in": t_in,
        "t_out": t_out,
        "attributes": attributes or {
            "cinematography": "steady wide", "shot_scale": "wide",
            "characters": [], "environment": "field", "action": "walks",
        },
        "quality": quality,
        "frames": frames,
    }


def grid_frames(t_in: float, t_out: float, fps: float = 2.0, aes: float = 0.8,
                visible: list[str] | None = None, luma: float = 0.5,
                variance: float = 0.1) -> list[dict]:
    out = []
    t = t_in
    while t < t_out - 1e-9:
        out.append({"t": round(t, 3), "aes": aes, "visible": visible or [],
                    "luma": luma, "variance": variance})
        t += 1.0 / fps
    return out
