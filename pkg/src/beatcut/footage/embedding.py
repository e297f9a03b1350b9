"""Deterministic text embeddings via signed feature hashing.

Attribute captions are embedded as token uni+bigrams hashed into a
fixed-dimension signed vector, then unit-normalized. The point is
platform-stable determinism for offline runs and tests; a provider-backed
encoder can be swapped in where semantic recall matters more than
reproducibility.
"""

from __future__ import annotations

import hashlib
import re

import numpy as np

_TOKEN = re.compile(r"[a-z0-9']+")

DEFAULT_DIM = 256


def _hash64(token: str) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def embed_text(text: str, dim: int = DEFAULT_DIM) -> tuple[float, ...]:
    """Hash token n-grams into a signed, unit-normalized vector.

    Empty or token-free text embeds to the zero vector.
    """
    tokens = _TOKEN.findall(text.lower())
    grams = tokens + [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]
    vec = np.zeros(dim)
    for gram in grams:
        h = _hash64(gram)
        sign = 1.0 if (h >> 63) & 1 == 0 else -1.0
        vec[h % dim] += sign
    norm = float(np.linalg.norm(vec))
    if norm > 0:
        vec /= norm
    return tuple(float(v) for v in vec)


def cosine(a: tuple[float, ...], b: tuple[float, ...]) -> float:
    """Cosine similarity with zero-vector conventions.

    Two zero vectors (both texts empty) count as identical (1.0); a zero
    vector against a non-zero one counts as unrelated (0.0).
    """
    if len(a) != len(b):
        raise ValueError(f"embedding dimension mismatch: {len(a)} vs {len(b)}")
    va, vb = np.asarray(a), np.asarray(b)
    na, nb = float(np.linalg.norm(va)), float(np.linalg.norm(vb))
    if na < 1e-12 and nb < 1e-12:
        return 1.0
    if na < 1e-12 or nb < 1e-12:
        return 0.0
    return float(np.clip(np.dot(va, vb) / (na * nb), -1.0, 1.0))
