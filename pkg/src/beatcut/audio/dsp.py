"""Signal-analysis primitives shared by the keypoint detectors.

Frames are centered: frame ``k`` covers samples around ``k * hop``, so a
feature at frame ``k`` describes time ``k * hop / sr``. That keeps
detected times shift-equivariant (prepending silence shifts every
feature by the same amount, up to one hop).

The onset envelope is half-wave-rectified spectral flux over a
log-compressed magnitude spectrogram; tempo comes from the envelope's
autocorrelation under a log-normal prior centered at 120 BPM. Because an
envelope peak locates an onset only to within a frame, and the flux of a
sharp attack leads the attack itself by a fraction of the window,
:func:`refine_onset_time` re-localizes each picked peak at sample
resolution using a short-window energy rise.
"""

from __future__ import annotations

import numpy as np


def stft_magnitude(x: np.ndarray, frame_size: int, hop: int) -> np.ndarray:
    """Magnitude spectrogram with centered Hann-windowed frames.

    Returns array of shape (n_frames, frame_size // 2 + 1) where
    n_frames = 1 + len(x) // hop.
    """
    x = np.asarray(x, dtype=np.float64)
    pad = frame_size // 2
    xp = np.pad(x, (pad, pad))
    n_frames = 1 + len(x) // hop
    idx = np.arange(frame_size)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = xp[idx] * np.hanning(frame_size)[None, :]
    return np.abs(np.fft.rfft(frames, axis=1))


def frame_times(n_frames: int, sr: int, hop: int) -> np.ndarray:
    return np.arange(n_frames) * (hop / sr)


def onset_envelope(x: np.ndarray, sr: int, frame_size: int, hop: int) -> tuple[np.ndarray, float, int]:
    """Half-wave-rectified spectral-flux novelty.

    Returns (envelope, frame rate, lead): the signal is preceded by
    ``lead`` whole frames of silence so an attack at t=0 still produces a
    flux rise against an all-zero previous window. Envelope index ``k``
    therefore describes time ``(k - lead) * hop / sr``.
    """
    lead = frame_size // hop
    xp = np.concatenate([np.zeros(lead * hop), np.asarray(x, dtype=np.float64)])
    mag = stft_magnitude(xp, frame_size, hop)
    logmag = np.log1p(1000.0 * mag)
    flux = np.diff(logmag, axis=0)
    np.maximum(flux, 0.0, out=flux)
    env = np.concatenate([[0.0], flux.sum(axis=1)])
    return env, sr / hop, lead


def moving_average(x: np.ndarray, width: int) -> np.ndarray:
    """Centered moving average with edge shrinkage."""
    width = max(1, int(width))
    kernel = np.ones(width) / width
    smoothed = np.convolve(x, kernel, mode="same")
    # Correct the shrinking support near the edges.
    counts = np.convolve(np.ones_like(x), kernel, mode="same")
    return smoothed / np.maximum(counts, 1e-12)


def pick_peaks(
    curve: np.ndarray,
    min_distance: int,
    adaptive_factor: float = 1.5,
    avg_width: int = 32,
    floor: float = 0.0,
) -> list[int]:
    """Local maxima above max(floor, adaptive_factor * local mean).

    Peaks are emitted greedily in descending height, suppressing anything
    within ``min_distance`` frames of an already-kept peak.
    """
    n = len(curve)
    if n < 3:
        return []
    local_mean = moving_average(curve, avg_width)
    threshold = np.maximum(floor, adaptive_factor * local_mean)
    is_max = np.zeros(n, dtype=bool)
    is_max[1:-1] = (curve[1:-1] >= curve[:-2]) & (curve[1:-1] > curve[2:]) & (curve[1:-1] > threshold[1:-1])
    candidates = sorted(np.flatnonzero(is_max), key=lambda i: (-curve[i], i))
    kept: list[int] = []
    for i in candidates:
        if all(abs(i - j) >= min_distance for j in kept):
            kept.append(i)
    return sorted(kept)


def chromagram(x: np.ndarray, sr: int, frame_size: int, hop: int,
               f_min: float = 55.0, f_max: float = 5000.0) -> np.ndarray:
    """Framewise 12-bin pitch-class energy profile (A = bin 9)."""
    mag = stft_magnitude(x, frame_size, hop)
    freqs = np.fft.rfftfreq(frame_size, 1.0 / sr)
    usable = (freqs >= f_min) & (freqs <= f_max)
    pcs = np.zeros(len(freqs), dtype=int)
    pcs[usable] = np.round(12.0 * np.log2(freqs[usable] / 440.0)).astype(int) % 12 + 9
    pcs[usable] %= 12
    chroma = np.zeros((mag.shape[0], 12))
    for pc in range(12):
        cols = usable & (pcs == pc)
        if cols.any():
            chroma[:, pc] = mag[:, cols].sum(axis=1)
    return chroma


def cosine_novelty(features: np.ndarray, half_window: int) -> np.ndarray:
    """Cosine distance between the mean feature of adjacent windows.

    novelty[t] compares features[t - w : t] against features[t : t + w];
    zero near the edges and wherever either window is silent.
    """
    n = len(features)
    w = max(1, int(half_window))
    novelty = np.zeros(n)
    if n < 2 * w:
        return novelty
    csum = np.cumsum(features, axis=0)
    for t in range(w, n - w):
        left = csum[t - 1] - (csum[t - w - 1] if t - w - 1 >= 0 else 0)
        right = csum[t + w - 1] - csum[t - 1]
        ln, rn = np.linalg.norm(left), np.linalg.norm(right)
        if ln < 1e-12 or rn < 1e-12:
            continue
        cos = float(np.dot(left, right) / (ln * rn))
        novelty[t] = 1.0 - min(1.0, max(-1.0, cos))
    return novelty


def autocorrelate_period(
    env: np.ndarray,
    fps: float,
    bpm_min: float = 40.0,
    bpm_max: float = 240.0,
    prior_bpm: float = 120.0,
    prior_std_octaves: float = 1.0,
) -> float:
    """Dominant repetition period of the onset envelope, in seconds.

    The raw autocorrelation is masked by a log-normal tempo prior; the
    winning integer lag is refined by parabolic interpolation so a
    fractional period (e.g. 21.5 frames at 120 BPM / 512 hop) does not
    force the beat grid to drift.
    """
    e = env - env.mean()
    acf = np.correlate(e, e, mode="full")[len(e) - 1:]
    lag_min = max(1, int(round(fps * 60.0 / bpm_max)))
    lag_max = min(len(acf) - 2, int(round(fps * 60.0 / bpm_min)))
    if lag_max <= lag_min:
        raise ValueError("signal too short for tempo analysis")
    lags = np.arange(lag_min, lag_max + 1)
    bpms = 60.0 * fps / lags
    weight = np.exp(-0.5 * ((np.log2(bpms / prior_bpm)) / prior_std_octaves) ** 2)
    scores = acf[lags] * weight
    best = lags[int(np.argmax(scores))]
    # Parabolic interpolation on the unweighted autocorrelation.
    y0, y1, y2 = acf[best - 1], acf[best], acf[best + 1]
    denom = y0 - 2 * y1 + y2
    shift = 0.0 if abs(denom) < 1e-12 else 0.5 * (y0 - y2) / denom
    shift = float(np.clip(shift, -0.5, 0.5))
    return (best + shift) / fps


def snap_to_local_peak(curve: np.ndarray, index: int, radius: int) -> int:
    lo = max(0, index - radius)
    hi = min(len(curve), index + radius + 1)
    if hi <= lo:
        return index
    return lo + int(np.argmax(curve[lo:hi]))


def refine_onset_time(x: np.ndarray, sr: int, t: float,
                      search: float = 0.06, window: float = 0.012) -> float:
    """Re-localize an onset near ``t`` by the steepest short-energy rise.

    Scans +-search seconds around t with ~1 ms steps; the onset is placed
    at the trailing edge of the analysis window whose energy grows the
    most, which lands on the attack start for impulsive events.
    """
    w = max(8, int(round(window * sr)))
    step = max(1, int(round(0.001 * sr)))
    s0 = int(round(t * sr))
    lo = max(0, s0 - int(round(search * sr)) - w)
    hi = min(len(x), s0 + int(round(search * sr)) + w)
    if hi - lo < 2 * w + step:
        return t
    seg = x[lo:hi].astype(np.float64) ** 2
    csum = np.concatenate([[0.0], np.cumsum(seg)])
    starts = np.arange(0, len(seg) - w, step)
    energy = csum[starts + w] - csum[starts]
    if len(energy) < 2 or energy.max() < 1e-12:
        return t
    rise = np.diff(energy)
    k = int(np.argmax(rise))
    if rise[k] <= 0:
        return t
    return (lo + starts[k + 1] + w - 1) / sr
