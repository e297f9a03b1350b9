"""Shot boundary detection and keyframe sampling.

The content detector compares HSV histograms of consecutive sampled
frames with a Hellinger (Bhattacharyya-style) distance; a boundary fires
when the distance exceeds the threshold after a refractory window.
Precomputed boundaries can instead be loaded verbatim from a JSON
sidecar (a list of seconds), which also serves metadata-only projects
with no decodable video file.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

from ..config import FootageConfig
from ..core import MediaRef
from .types import Shot


class MediaError(RuntimeError):
    """Video could not be decoded or is empty."""


def sample_keyframes(t_in: float, t_out: float, fps: float) -> tuple[float, ...]:
    """Keyframe grid of a shot: t_in, t_in + 1/fps, ... strictly below t_out."""
    step = 1.0 / fps
    count = max(1, int(np.ceil((t_out - t_in) * fps - 1e-9)))
    return tuple(t_in + k * step for k in range(count))


def shots_from_boundaries(source: MediaRef, boundaries: Sequence[float],
                          fps: float = 2.0) -> list[Shot]:
    """Tile the source duration with shots split at the given times."""
    cuts = sorted({float(b) for b in boundaries if 0.0 <= b < source.duration})
    if not cuts or cuts[0] > 0.0:
        cuts = [0.0] + cuts
    edges = cuts + [source.duration]
    shots = []
    for i, (a, b) in enumerate(zip(edges, edges[1:])):
        if b - a <= 1e-9:
            continue
        shots.append(Shot(
            id=f"{source.id}_s{i + 1:04d}", source=source.id, t_in=a, t_out=b,
            keyframes=sample_keyframes(a, b, fps),
        ))
    return shots


def load_boundary_sidecar(path: str | Path) -> list[float]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, list):
        raise ValueError(f"boundary sidecar {path} must be a JSON list of seconds")
    return [float(v) for v in data]


def _iter_sampled_frames(path: str, sample_fps: float) -> Iterator[tuple[float, np.ndarray]]:
    import cv2

    cap = cv2.VideoCapture(path)
    if not cap.isOpened():
        raise MediaError(f"cannot decode video: {path}")
    native_fps = cap.get(cv2.CAP_PROP_FPS) or 0.0
    if native_fps <= 0:
        native_fps = 25.0
    stride = max(1, int(round(native_fps / sample_fps)))
    index = 0
    try:
        while True:
            ok, frame = cap.read()
            if not ok:
                break
            if index % stride == 0:
                yield index / native_fps, frame
            index += 1
    finally:
        cap.release()
    if index == 0:
        raise MediaError(f"video has no frames: {path}")


def probe_video_duration(path: str | Path) -> float:
    import cv2

    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        raise MediaError(f"cannot decode video: {path}")
    try:
        frames = cap.get(cv2.CAP_PROP_FRAME_COUNT)
        fps = cap.get(cv2.CAP_PROP_FPS) or 25.0
    finally:
        cap.release()
    if frames <= 0 or fps <= 0:
        raise MediaError(f"video reports no duration: {path}")
    return float(frames / fps)


def _hsv_histogram(frame: np.ndarray, cfg: FootageConfig) -> np.ndarray:
    import cv2

    h = frame.shape[0]
    w = frame.shape[1]
    short = min(h, w)
    if short > cfg.short_side:
        scale = cfg.short_side / short
        frame = cv2.resize(frame, (max(1, int(w * scale)), max(1, int(h * scale))))
    hsv = cv2.cvtColor(frame, cv2.COLOR_BGR2HSV)
    hist = cv2.calcHist([hsv], [0, 1, 2], None,
                        [cfg.hist_bins_h, cfg.hist_bins_s, cfg.hist_bins_v],
                        [0, 180, 0, 256, 0, 256]).flatten()
    total = hist.sum()
    return hist / total if total > 0 else hist


def _hellinger(h1: np.ndarray, h2: np.ndarray) -> float:
    # Bhattacharyya affinity of two normalized histograms, mapped to [0, 1].
    return float(1.0 - np.sqrt(h1 * h2).sum())


def extract_keyframes(source_path: str | Path, shot: Shot, out_dir: str | Path,
                      short_side: int = 360) -> tuple[str, ...]:
    """Materialize a shot's keyframes as JPEGs (short side capped).

    Needed for providers that take image attachments; the mock never
    requires pixels. Returns the written paths, parallel to the keyframe
    grid.
    """
    import cv2

    out = Path(out_dir) / shot.id
    out.mkdir(parents=True, exist_ok=True)
    cap = cv2.VideoCapture(str(source_path))
    if not cap.isOpened():
        raise MediaError(f"cannot decode video: {source_path}")
    paths = []
    try:
        for i, t in enumerate(shot.keyframes):
            cap.set(cv2.CAP_PROP_POS_MSEC, t * 1000.0)
            ok, frame = cap.read()
            if not ok:
                raise MediaError(f"cannot read frame at {t:.2f}s from {source_path}")
            h, w = frame.shape[:2]
            if min(h, w) > short_side:
                scale = short_side / min(h, w)
                frame = cv2.resize(frame, (max(1, int(w * scale)), max(1, int(h * scale))))
            path = out / f"f{i:04d}.jpg"
            cv2.imwrite(str(path), frame)
            paths.append(str(path))
    finally:
        cap.release()
    return tuple(paths)


def detect_shots(
    source: MediaRef,
    config: Optional[FootageConfig] = None,
    boundary_sidecar: Optional[str | Path] = None,
) -> list[Shot]:
    """Split a source into shots (boundaries only, attributes come later)."""
    cfg = config or FootageConfig()
    if boundary_sidecar is not None:
        return shots_from_boundaries(source, load_boundary_sidecar(boundary_sidecar),
                                     cfg.keyframe_fps)
    boundaries: list[float] = []
    prev_hist: Optional[np.ndarray] = None
    last_boundary = -1e9
    for t, frame in _iter_sampled_frames(source.path, cfg.keyframe_fps):
        hist = _hsv_histogram(frame, cfg)
        if prev_hist is not None:
            distance = _hellinger(prev_hist, hist)
            if distance > cfg.boundary_threshold and t - last_boundary > cfg.refractory:
                boundaries.append(t)
                last_boundary = t
        prev_hist = hist
    return shots_from_boundaries(source, boundaries, cfg.keyframe_fps)
