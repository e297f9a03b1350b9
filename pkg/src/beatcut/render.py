"""Materialize a timeline: EDL export and external media-tool rendering.

The EDL is a versioned JSON document: ordered entries with source path,
in/out points and the output offset, plus the music track and the total
duration. It round-trips losslessly and is the sole input the renderer
needs.

Rendering shells out to ffmpeg/ffprobe-compatible binaries with a
pinned argument contract (documented in the README): each clip is trimmed
with a re-encode for frame accuracy, clips are concatenated, and the
audio stream is replaced by the music trimmed to the timeline duration.
The output duration is verified by probing. A missing tool is an
explicit, catchable condition so the pipeline can degrade to EDL-only.
"""

from __future__ import annotations

import json
import shutil
import subprocess
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Mapping, Optional

from .artifacts import canonical_json
from .core import Clip, MediaRef, Timeline, validate_timeline

EDL_VERSION = 1

_RENDER_TIMEOUT = 600  # seconds per subprocess


class EdlValidationError(ValueError):
    """Refused to export an EDL for a timeline with hard violations."""


class ToolMissingError(RuntimeError):
    """The external media tool is not on PATH; EDL-only mode applies."""


class RenderError(RuntimeError):
    """The media tool failed or produced a wrong-duration output."""


def export_edl(
    timeline: Timeline,
    sources: Mapping[str, MediaRef],
    music: MediaRef,
    tolerance: float = 0.05,
) -> dict:
    """Build the EDL document for a validated timeline.

    Raises :class:`EdlValidationError` when validation reports anything.
    """
    violations = validate_timeline(timeline, music, tolerance, sources)
    if violations:
        details = "; ".join(v.detail for v in violations)
        raise EdlValidationError(f"timeline failed validation: {details}")
    entries = []
    offset = 0.0
    for clip in timeline.clips:
        ref = sources[clip.source]
        entries.append({
            "source": clip.source,
            "path": ref.path,
            "t_in": clip.t_in,
            "t_out": clip.t_out,
            "output_offset": offset,
            "origin_shot": clip.origin_shot,
            "spec_id": clip.spec_id,
        })
        offset += clip.duration
    return {
        "version": EDL_VERSION,
        "music": {"id": music.id, "path": music.path, "duration": music.duration},
        "total_duration": offset,
        "entries": entries,
    }


def edl_to_json(edl: dict) -> str:
    return canonical_json(edl)


def parse_edl(doc: str | dict) -> tuple[Timeline, dict]:
    """Reconstruct (timeline, document) from an EDL JSON document."""
    edl = json.loads(doc) if isinstance(doc, str) else doc
    if edl.get("version") != EDL_VERSION:
        raise ValueError(f"unsupported EDL version {edl.get('version')!r}")
    clips = tuple(
        Clip(source=e["source"], t_in=e["t_in"], t_out=e["t_out"],
             origin_shot=e.get("origin_shot", ""), spec_id=e.get("spec_id", ""))
        for e in edl["entries"]
    )
    return Timeline(clips=clips, music=edl["music"]["id"]), edl


def _run(cmd: list[str]) -> None:
    proc = subprocess.run(cmd, capture_output=True, text=True, timeout=_RENDER_TIMEOUT)
    if proc.returncode != 0:
        raise RenderError(
            f"command failed ({proc.returncode}): {' '.join(cmd[:6])}... :: {proc.stderr[-400:]}"
        )


def probe_duration(path: str | Path, ffprobe: str = "ffprobe") -> float:
    tool = shutil.which(ffprobe)
    if tool is None:
        raise ToolMissingError(f"{ffprobe} not found on PATH")
    proc = subprocess.run(
        [tool, "-v", "error", "-print_format", "json", "-show_format", str(path)],
        capture_output=True, text=True, timeout=_RENDER_TIMEOUT,
    )
    if proc.returncode != 0:
        raise RenderError(f"probe failed: {proc.stderr[-400:]}")
    try:
        return float(json.loads(proc.stdout)["format"]["duration"])
    except (KeyError, ValueError) as exc:
        raise RenderError(f"probe output unreadable: {exc}")


def render_video(
    edl: dict,
    output_path: str | Path,
    ffmpeg: str = "ffmpeg",
    ffprobe: str = "ffprobe",
    workers: int = 2,
    duration_slack: float = 0.1,
) -> Path:
    """Cut, concatenate and mux per the EDL; verify the output duration.

    Clips are re-encoded at cut points (duration fidelity beats speed),
    concatenated stream-copy, then muxed with the music track trimmed to
    the timeline duration. Sources are never mutated.
    """
    entries = edl.get("entries", [])
    if not entries:
        raise ValueError("refusing to render an empty timeline")
    tool = shutil.which(ffmpeg)
    if tool is None:
        raise ToolMissingError(f"{ffmpeg} not found on PATH")
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)

    with tempfile.TemporaryDirectory(prefix="beatcut-render-") as tmp:
        tmpdir = Path(tmp)

        def trim(i_entry) -> Path:
            i, entry = i_entry
            part = tmpdir / f"clip_{i:04d}.mp4"
            _run([
                tool, "-y", "-loglevel", "error",
                "-ss", f"{entry['t_in']:.6f}", "-to", f"{entry['t_out']:.6f}",
                "-i", entry["path"],
                "-an", "-c:v", "libx264", "-preset", "veryfast", "-crf", "20",
                "-pix_fmt", "yuv420p", str(part),
            ])
            return part

        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            parts = list(pool.map(trim, enumerate(entries)))

        concat_list = tmpdir / "concat.txt"
        concat_list.write_text(
            "".join(f"file '{p.as_posix()}'\n" for p in parts), encoding="utf-8"
        )
        joined = tmpdir / "joined.mp4"
        _run([tool, "-y", "-loglevel", "error", "-f", "concat", "-safe", "0",
              "-i", str(concat_list), "-c", "copy", str(joined)])

        total = float(edl["total_duration"])
        _run([
            tool, "-y", "-loglevel", "error",
            "-i", str(joined), "-i", edl["music"]["path"],
            "-map", "0:v", "-map", "1:a",
            "-t", f"{total:.6f}",
            "-c:v", "copy", "-c:a", "aac",
            str(output_path),
        ])

    actual = probe_duration(output_path, ffprobe)
    expected = float(edl["total_duration"])
    if abs(actual - expected) > duration_slack:
        raise RenderError(
            f"rendered duration {actual:.3f}s deviates from expected {expected:.3f}s "
            f"by more than {duration_slack}s"
        )
    return output_path
