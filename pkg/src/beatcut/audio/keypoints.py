"""Sound keypoint detection and the candidate cut-point grid.

Three detectors feed one pool:

* downbeats: onset envelope -> tempo by autocorrelation -> beat grid by
  comb phase alignment with per-beat peak tracking -> downbeats as every
  Nth beat, N-phase chosen by accent-energy voting;
* pitch changes: framewise 12-bin chroma, cosine-distance novelty
  between smoothed adjacent windows, local-maximum picking;
* energy changes: half-wave-rectified spectral-flux novelty peaks.

Intensities are normalized to the per-track maximum of each kind. The
pool then passes through :func:`filter_keypoints` (de-duplication) and
:func:`select_unit_keypoints` (per-unit pacing constraints).
"""

from __future__ import annotations

import dataclasses
from typing import Iterable, Sequence

import numpy as np

from ..config import AudioConfig
from . import dsp
from .types import KeypointKind, KeypointWeights, SoundKeypoint

_KIND_INDEX = {KeypointKind.DOWNBEAT: 0, KeypointKind.PITCH_CHANGE: 1, KeypointKind.ENERGY_CHANGE: 2}

# Below this RMS the buffer counts as digital silence for every detector.
_SILENCE_RMS = 1e-5


class AudioTooShortError(ValueError):
    """Input shorter than the minimum the detectors can analyze."""


def _check_input(samples: np.ndarray, sr: int) -> np.ndarray:
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("detectors require mono samples")
    if sr < 8000:
        raise ValueError(f"sample rate must be >= 8 kHz, got {sr}")
    if len(x) < 2 * sr:
        raise AudioTooShortError(f"need >= 2 s of audio, got {len(x) / sr:.2f} s")
    return x


def _is_silent(x: np.ndarray) -> bool:
    return float(np.sqrt(np.mean(x ** 2))) < _SILENCE_RMS


def detect_keypoints(
    samples: np.ndarray,
    sr: int,
    kind: KeypointKind,
    config: AudioConfig | None = None,
) -> list[SoundKeypoint]:
    """Detect keypoints of one kind on the analysis time axis.

    Digital silence yields an empty list (not an error); input shorter
    than 2 s raises :class:`AudioTooShortError`.
    """
    cfg = config or AudioConfig()
    x = _check_input(samples, sr)
    if _is_silent(x):
        return []
    if kind is KeypointKind.DOWNBEAT:
        return _detect_downbeats(x, sr, cfg)
    if kind is KeypointKind.PITCH_CHANGE:
        return _detect_pitch_changes(x, sr, cfg)
    if kind is KeypointKind.ENERGY_CHANGE:
        return _detect_energy_changes(x, sr, cfg)
    raise ValueError(f"unknown keypoint kind {kind!r}")


def detect_all_keypoints(samples: np.ndarray, sr: int,
                         config: AudioConfig | None = None) -> list[SoundKeypoint]:
    """Union of all three detector kinds, sorted by time."""
    pool: list[SoundKeypoint] = []
    for kind in KeypointKind:
        pool.extend(detect_keypoints(samples, sr, kind, config))
    pool.sort(key=lambda k: (k.t, k.kind.value))
    return pool


def _normalized(values: np.ndarray) -> np.ndarray:
    peak = float(values.max()) if len(values) else 0.0
    return values / peak if peak > 0 else values


def _grid_time(t: float, sr: int, hop: int, duration: float) -> float:
    """Quantize a refined onset time back onto the analysis axis.

    Keypoint timestamps stay multiples of hop/sr; the sample-level
    refinement only decides *which* grid point is nearest the attack.
    """
    step = hop / sr
    return min(max(round(t / step) * step, 0.0), duration)


def _detect_energy_changes(x: np.ndarray, sr: int, cfg: AudioConfig) -> list[SoundKeypoint]:
    env, fps, lead = dsp.onset_envelope(x, sr, cfg.frame_size, cfg.hop_size)
    if env.max() <= 0:
        return []
    peaks = dsp.pick_peaks(env, min_distance=2, adaptive_factor=1.5,
                           avg_width=int(round(0.75 * fps)))
    if not peaks:
        return []
    intensities = _normalized(env[peaks])
    duration = len(x) / sr
    out = []
    for frame, intensity in zip(peaks, intensities):
        t = dsp.refine_onset_time(x, sr, max(0.0, (frame - lead) * cfg.hop_size / sr))
        out.append(SoundKeypoint(t=_grid_time(t, sr, cfg.hop_size, duration),
                                 kind=KeypointKind.ENERGY_CHANGE, intensity=float(intensity)))
    out.sort(key=lambda k: k.t)
    return out


def _detect_pitch_changes(x: np.ndarray, sr: int, cfg: AudioConfig) -> list[SoundKeypoint]:
    chroma = dsp.chromagram(x, sr, cfg.frame_size, cfg.hop_size)
    fps = sr / cfg.hop_size
    half_window = max(2, int(round(0.25 * fps)))
    novelty = dsp.cosine_novelty(chroma, half_window)
    if novelty.max() <= 0:
        return []
    peaks = dsp.pick_peaks(novelty, min_distance=half_window, adaptive_factor=1.0,
                           avg_width=4 * half_window, floor=cfg.pitch_threshold)
    if not peaks:
        return []
    intensities = _normalized(novelty[peaks])
    duration = len(x) / sr
    return [
        SoundKeypoint(t=min(frame * cfg.hop_size / sr, duration), kind=KeypointKind.PITCH_CHANGE,
                      intensity=float(i))
        for frame, i in zip(peaks, intensities)
    ]


def _track_beats(env: np.ndarray, fps: float, period_frames: float) -> list[int]:
    """Beat frames: comb phase alignment, then per-beat peak tracking.

    The comb picks the strongest global phase; prediction then walks
    outward from it, snapping each predicted beat to the local envelope
    maximum so that a fractional-frame period cannot accumulate drift.
    """
    n = len(env)
    radius = max(1, int(round(period_frames / 4)))
    best_phase, best_score = 0.0, -1.0
    for phase in np.arange(0.0, period_frames, 0.25):
        idx = np.round(np.arange(phase, n, period_frames)).astype(int)
        idx = idx[idx < n]
        score = float(env[idx].sum())
        if score > best_score:
            best_phase, best_score = float(phase), score
    anchor = dsp.snap_to_local_peak(env, int(round(best_phase)), radius)
    beats = [anchor]
    pos = float(anchor)
    while pos + period_frames < n:
        pos += period_frames
        snapped = dsp.snap_to_local_peak(env, int(round(pos)), radius)
        if snapped > beats[-1]:
            beats.append(snapped)
            pos = float(snapped)
    pos = float(anchor)
    while pos - period_frames >= 0:
        pos -= period_frames
        snapped = dsp.snap_to_local_peak(env, int(round(pos)), radius)
        if snapped < beats[0]:
            beats.insert(0, snapped)
            pos = float(snapped)
    return beats


def _detect_downbeats(x: np.ndarray, sr: int, cfg: AudioConfig) -> list[SoundKeypoint]:
    env, fps, lead = dsp.onset_envelope(x, sr, cfg.frame_size, cfg.hop_size)
    if env.max() <= 0:
        return []
    period = dsp.autocorrelate_period(env, fps)
    beats = _track_beats(env, fps, period * fps)
    if not beats:
        return []
    # Ghost beats predicted into silent stretches carry almost no energy.
    strengths = env[np.asarray(beats)]
    keep = strengths >= 0.05 * strengths.max()
    beats = [b for b, k in zip(beats, keep) if k]
    if not beats:
        return []
    meter = max(1, int(cfg.meter))
    votes = np.zeros(meter)
    for i, b in enumerate(beats):
        votes[i % meter] += env[b]
    offset = int(np.argmax(votes))
    downbeat_frames = beats[offset::meter]
    intensities = _normalized(env[np.asarray(downbeat_frames)])
    duration = len(x) / sr
    out = []
    for frame, intensity in zip(downbeat_frames, intensities):
        t = dsp.refine_onset_time(x, sr, max(0.0, (frame - lead) * cfg.hop_size / sr))
        out.append(SoundKeypoint(t=_grid_time(t, sr, cfg.hop_size, duration),
                                 kind=KeypointKind.DOWNBEAT, intensity=float(intensity)))
    out.sort(key=lambda k: k.t)
    return out


def _priority(k: SoundKeypoint) -> tuple:
    # Highest intensity first; downbeats win ties; then earliest time.
    return (-k.intensity, 0 if k.kind is KeypointKind.DOWNBEAT else 1, k.t, k.kind.value)


def filter_keypoints(pool: Sequence[SoundKeypoint], window: float) -> list[SoundKeypoint]:
    """De-duplicate a keypoint pool: enforce pairwise spacing >= window.

    Keypoints are kept greedily in priority order (intensity descending,
    downbeat kind winning ties, then time); anything closer than
    ``window`` to a kept keypoint is merged into its nearest survivor,
    contributing its cue intensity to the survivor's components.
    """
    if window <= 0:
        raise ValueError(f"filter window must be positive, got {window}")
    ts = [k.t for k in pool]
    if ts != sorted(ts):
        raise ValueError("keypoint pool must be sorted by time")
    survivors: list[dict] = []
    for cand in sorted(pool, key=_priority):
        near = [s for s in survivors if abs(s["t"] - cand.t) < window]
        if near:
            host = min(near, key=lambda s: abs(s["t"] - cand.t))
            host["components"] = tuple(
                max(a, b) for a, b in zip(host["components"], cand.components)
            )
        else:
            survivors.append({
                "t": cand.t, "kind": cand.kind, "intensity": cand.intensity,
                "components": cand.components, "synthetic": cand.synthetic,
            })
    survivors.sort(key=lambda s: s["t"])
    return [SoundKeypoint(**s) for s in survivors]


def score_keypoint(intensities: Sequence[float], weights: KeypointWeights) -> float:
    """Significance of a cut point: weighted sum of its cue intensities."""
    if len(intensities) != 3:
        raise ValueError("expected a 3-vector of cue intensities")
    for v in intensities:
        if not (0.0 <= v <= 1.0):
            raise ValueError(f"cue intensities must be in [0, 1], got {v}")
    w = weights.as_tuple()
    return float(sum(wi * vi for wi, vi in zip(w, intensities)))


def select_unit_keypoints(
    unit,
    keypoints: Iterable[SoundKeypoint],
    weights: KeypointWeights,
    min_gap: float,
    max_gap: float,
) -> list[SoundKeypoint]:
    """Choose the cut grid inside one structural unit.

    Greedily retains interior keypoints in descending significance order
    subject to spacing >= min_gap (from each other and from the unit
    edges); afterwards, any inter-cut segment longer than max_gap gets
    the best remaining keypoint inserted, or a synthetic midpoint
    boundary when none fits. All resulting segments have length in
    [min_gap, max_gap], except possibly the only segment of a unit
    shorter than min_gap itself.
    """
    if min_gap >= max_gap:
        raise ValueError(f"min_gap must be < max_gap, got {min_gap} >= {max_gap}")
    interior = [k for k in keypoints if unit.start < k.t < unit.end]
    ranked = sorted(interior, key=lambda k: (-score_keypoint(k.components, weights), k.t))

    selected: list[SoundKeypoint] = []

    def fits(t: float, among: list[SoundKeypoint]) -> bool:
        if t - unit.start < min_gap or unit.end - t < min_gap:
            return False
        return all(abs(t - s.t) >= min_gap for s in among)

    for cand in ranked:
        if fits(cand.t, selected):
            selected.append(cand)
    selected.sort(key=lambda k: k.t)

    remaining = [k for k in ranked if k not in selected]
    # Split any over-long segment; a midpoint halving always terminates
    # and keeps both halves >= min_gap as long as max_gap >= 2 * min_gap.
    while True:
        bounds = [unit.start] + [k.t for k in selected] + [unit.end]
        gap = next(((a, b) for a, b in zip(bounds, bounds[1:]) if b - a > max_gap), None)
        if gap is None:
            break
        a, b = gap
        inside = [k for k in remaining if a < k.t < b and k.t - a >= min_gap and b - k.t >= min_gap]
        if inside:
            chosen = inside[0]  # ranked order: best remaining score
            remaining.remove(chosen)
        else:
            chosen = SoundKeypoint(t=(a + b) / 2.0, kind=KeypointKind.ENERGY_CHANGE,
                                   intensity=0.0, synthetic=True)
        selected.append(chosen)
        selected.sort(key=lambda k: k.t)
    return selected
