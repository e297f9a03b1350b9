"""WAV decoding and encoding (PCM 8/16/24/32-bit and float).

Everything downstream works on float64 mono in [-1, 1]; multichannel
input is downmixed by averaging. Other containers are out of scope here:
the render module's external media tool handles those.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly


def read_wav(path: str | Path) -> tuple[np.ndarray, int]:
    """Load a WAV file as (mono float64 samples in [-1, 1], sample rate)."""
    sr, data = wavfile.read(str(path))
    x = np.asarray(data)
    if x.ndim == 2:
        x = x.mean(axis=1)
    if x.dtype == np.uint8:
        x = (x.astype(np.float64) - 128.0) / 128.0
    elif np.issubdtype(x.dtype, np.integer):
        x = x.astype(np.float64) / float(np.iinfo(data.dtype).max)
    else:
        x = x.astype(np.float64)
    return x, int(sr)


def write_wav(path: str | Path, samples: np.ndarray, sample_rate: int) -> None:
    """Write mono float samples as 16-bit PCM."""
    x = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    wavfile.write(str(path), sample_rate, (x * 32767.0).astype(np.int16))


def wav_duration(path: str | Path) -> float:
    samples, sr = read_wav(path)
    return len(samples) / sr


def resample(samples: np.ndarray, sr: int, target_sr: int) -> np.ndarray:
    if sr == target_sr:
        return samples
    g = math.gcd(sr, target_sr)
    return resample_poly(samples, target_sr // g, sr // g)


def load_audio(path: str | Path, target_sr: int) -> tuple[np.ndarray, int]:
    """Read a WAV file and resample it to the analysis rate."""
    samples, sr = read_wav(path)
    return resample(samples, sr, target_sr), target_sr
