"""Coarse structural segmentation of the music track.

The provider path asks the model to partition the track given a compact
text summary of its novelty and chroma profile (text-only providers get
no raw audio); the offline fallback segments by checkerboard-kernel
correlation over the self-similarity matrix of chroma+energy features.
Either way, boundaries are snapped onto the filtered keypoint grid so
units start and end on plausible cut points, and every unit receives a
caption describing local rhythm and energy.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..config import AudioConfig
from ..provider.base import (
    Attachment,
    AttachmentKind,
    ModelRequest,
    Provider,
    ProviderError,
    Task,
    render_prompt,
)
from . import dsp
from .types import MusicUnit, SoundKeypoint

_STRUCTURE_PROMPT = (
    "Partition this music track into coarse structural units (intro, verse, "
    "chorus, bridge, outro, other). Units must tile the full duration without "
    "overlap. Use the novelty and chroma summaries in the context block."
)

_CAPTION_PROMPT = (
    "Describe this musical section's local rhythm, emotion and energy in one "
    "sentence, based on the stats in the context block."
)


def _coarse_features(x: np.ndarray, sr: int, cfg: AudioConfig) -> tuple[np.ndarray, float]:
    """Chroma + energy features aggregated to ~4 Hz for the SSM."""
    chroma = dsp.chromagram(x, sr, cfg.frame_size, cfg.hop_size)
    mag = dsp.stft_magnitude(x, cfg.frame_size, cfg.hop_size)
    energy = np.log1p(mag.sum(axis=1))
    fps = sr / cfg.hop_size
    group = max(1, int(round(fps / 4.0)))
    n = len(chroma) // group
    if n == 0:
        return np.zeros((0, 13)), fps
    chroma_c = chroma[: n * group].reshape(n, group, 12).mean(axis=1)
    energy_c = energy[: n * group].reshape(n, group).mean(axis=1)
    norms = np.linalg.norm(chroma_c, axis=1, keepdims=True)
    chroma_c = np.divide(chroma_c, norms, out=np.zeros_like(chroma_c), where=norms > 1e-12)
    e_span = energy_c.max() - energy_c.min()
    energy_n = (energy_c - energy_c.min()) / e_span if e_span > 1e-12 else np.zeros(n)
    feats = np.hstack([chroma_c, energy_n[:, None]])
    return feats, fps / group


def _checkerboard_kernel(half: int) -> np.ndarray:
    size = 2 * half
    sign = np.ones((size, size))
    sign[:half, half:] = -1
    sign[half:, :half] = -1
    coords = np.arange(size) - half + 0.5
    taper = np.exp(-0.5 * (coords / (half / 2.0)) ** 2)
    return sign * np.outer(taper, taper)


def heuristic_boundaries(x: np.ndarray, sr: int, cfg: AudioConfig) -> list[float]:
    """Novelty-based section boundaries (interior only, seconds)."""
    feats, coarse_fps = _coarse_features(x, sr, cfg)
    n = len(feats)
    half = max(2, int(round(4.0 * coarse_fps)))
    if n < 2 * half + 2:
        return []
    rows = np.linalg.norm(feats, axis=1, keepdims=True)
    unit = np.divide(feats, rows, out=np.zeros_like(feats), where=rows > 1e-12)
    ssm = unit @ unit.T
    kernel = _checkerboard_kernel(half)
    novelty = np.zeros(n)
    for t in range(half, n - half):
        patch = ssm[t - half:t + half, t - half:t + half]
        novelty[t] = float((patch * kernel).sum())
    np.maximum(novelty, 0.0, out=novelty)
    if novelty.max() <= 0:
        return []
    min_dist = max(1, int(round(cfg.min_unit_length * coarse_fps)))
    peaks = dsp.pick_peaks(novelty, min_distance=min_dist, adaptive_factor=1.2,
                           avg_width=4 * half, floor=0.1 * float(novelty.max()))
    return [p / coarse_fps for p in peaks]


def _snap(t: float, keypoints: Sequence[SoundKeypoint], tolerance: float) -> float:
    if not keypoints:
        return t
    nearest = min(keypoints, key=lambda k: abs(k.t - t))
    return nearest.t if abs(nearest.t - t) <= tolerance else t


def _audio_summary(x: np.ndarray, sr: int, cfg: AudioConfig, duration: float) -> dict:
    env, fps, _lead = dsp.onset_envelope(x, sr, cfg.frame_size, cfg.hop_size)
    peak = env.max() or 1.0
    step = max(1, int(round(fps)))  # ~1 Hz novelty sketch
    sketch = [round(float(v), 3) for v in (env / peak)[::step]]
    chroma = dsp.chromagram(x, sr, cfg.frame_size, cfg.hop_size)
    profile = chroma.sum(axis=0)
    total = profile.sum() or 1.0
    return {
        "duration": round(duration, 3),
        "novelty_1hz": sketch,
        "chroma_profile": [round(float(v / total), 4) for v in profile],
    }


def _unit_stats(x: np.ndarray, sr: int, start: float, end: float) -> dict:
    seg = x[int(start * sr):int(end * sr)]
    rms = float(np.sqrt(np.mean(seg ** 2))) if len(seg) else 0.0
    return {"start": round(start, 3), "end": round(end, 3), "energy": round(min(1.0, rms * 8.0), 3)}


def _fallback_caption(label: str, stats: dict) -> str:
    mood = "driving, high energy" if stats["energy"] >= 0.4 else "calm, low energy"
    return f"{label} section, {mood}, steady rhythm"


def segment_structure(
    samples: np.ndarray,
    sr: int,
    provider: Optional[Provider],
    keypoints: Sequence[SoundKeypoint] = (),
    config: Optional[AudioConfig] = None,
) -> list[MusicUnit]:
    """Partition the decoded track into labeled, captioned MusicUnits.

    Units always tile [0, duration] without overlap. Boundaries proposed
    by the provider (or the heuristic fallback) are snapped to the
    nearest filtered keypoint within ``snap_tolerance``.
    """
    cfg = config or AudioConfig()
    x = np.asarray(samples, dtype=np.float64)
    duration = len(x) / sr

    provider_units: list[dict] = []
    if provider is not None:
        request = ModelRequest(
            task=Task.MUSIC_STRUCTURE,
            prompt=render_prompt(_STRUCTURE_PROMPT, {"duration": round(duration, 3)}),
            attachments=(Attachment(AttachmentKind.AUDIO_SEGMENT,
                                    _audio_summary(x, sr, cfg, duration)),),
        )
        try:
            provider_units = provider.complete(request).parsed["units"]
        except ProviderError:
            if not cfg.structure_fallback:
                raise
            provider_units = []

    if provider_units:
        raw_bounds = sorted({float(u["start"]) for u in provider_units}
                            | {float(u["end"]) for u in provider_units})
    else:
        raw_bounds = heuristic_boundaries(x, sr, cfg)

    interior = sorted(b for b in raw_bounds if 1e-6 < b < duration - 1e-6)
    snapped = []
    for b in interior:
        t = _snap(b, keypoints, cfg.snap_tolerance)
        if snapped and t - snapped[-1] < 1e-6:
            continue
        if 1e-6 < t < duration - 1e-6:
            snapped.append(t)
    bounds = [0.0] + snapped + [duration]

    def label_for(mid: float, index: int) -> str:
        for u in provider_units:
            if float(u["start"]) - 1e-6 <= mid <= float(u["end"]) + 1e-6 and u.get("label"):
                return str(u["label"])
        return "other"

    def provider_caption(mid: float) -> str:
        for u in provider_units:
            if float(u["start"]) - 1e-6 <= mid <= float(u["end"]) + 1e-6 and u.get("caption"):
                return str(u["caption"])
        return ""

    units: list[MusicUnit] = []
    for i, (a, b) in enumerate(zip(bounds, bounds[1:])):
        mid = (a + b) / 2.0
        label = label_for(mid, i)
        stats = _unit_stats(x, sr, a, b)
        caption = provider_caption(mid)
        if not caption and provider is not None:
            request = ModelRequest(
                task=Task.MUSIC_CAPTION,
                prompt=render_prompt(_CAPTION_PROMPT, {**stats, "label": label}),
                attachments=(Attachment(AttachmentKind.AUDIO_SEGMENT, stats),),
            )
            try:
                caption = provider.complete(request).parsed["caption"]
            except ProviderError:
                if not cfg.structure_fallback:
                    raise
                caption = ""
        if not caption:
            caption = _fallback_caption(label, stats)
        units.append(MusicUnit(id=f"u{i + 1:02d}", start=a, end=b, label=label, caption=caption))
    return units
