"""Minimal SRT subtitle reader.

Only what identity inference needs: timed text lines. Malformed blocks
are skipped rather than fatal; an empty or missing file yields an empty
transcript (VLOG footage frequently has none).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

_TIMING = re.compile(
    r"(\d+):(\d{2}):(\d{2})[,.](\d{1,3})\s*-->\s*(\d+):(\d{2}):(\d{2})[,.](\d{1,3})"
)


@dataclass(frozen=True)
class SubtitleLine:
    start: float
    end: float
    text: str


def _seconds(h: str, m: str, s: str, ms: str) -> float:
    return int(h) * 3600 + int(m) * 60 + int(s) + int(ms.ljust(3, "0")) / 1000.0


def parse_srt(text: str) -> list[SubtitleLine]:
    lines: list[SubtitleLine] = []
    for block in re.split(r"\n\s*\n", text.strip()):
        if not block.strip():
            continue
        rows = block.splitlines()
        timing = None
        content_start = 0
        for i, row in enumerate(rows):
            m = _TIMING.search(row)
            if m:
                timing = m
                content_start = i + 1
                break
        if timing is None:
            continue
        start = _seconds(*timing.groups()[:4])
        end = _seconds(*timing.groups()[4:])
        content = " ".join(r.strip() for r in rows[content_start:] if r.strip())
        if content:
            lines.append(SubtitleLine(start=start, end=end, text=content))
    return lines


def load_srt(path: str | Path) -> list[SubtitleLine]:
    p = Path(path)
    if not p.exists():
        return []
    return parse_srt(p.read_text(encoding="utf-8", errors="replace"))
