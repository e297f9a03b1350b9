"""Project manifest: the JSON file that declares one editing job.

A manifest names the footage and music files, carries the instruction,
points at optional sidecar inputs (ground truth for the mock provider,
shot-boundary lists, SRT subtitles) and may override any config value.
Relative paths are resolved against the manifest's directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import jsonschema

from .config import PipelineConfig
from .core import Instruction, InstructionCategory, MediaKind, MediaRef

MANIFEST_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["footage", "music", "instruction"],
    "properties": {
        "footage": {
            "type": "object",
            "required": ["path"],
            "properties": {
                "id": {"type": "string"},
                "path": {"type": "string"},
                "duration": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "music": {
            "type": "object",
            "required": ["path"],
            "properties": {
                "id": {"type": "string"},
                "path": {"type": "string"},
                "duration": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "instruction": {
            "type": "object",
            "required": ["text"],
            "properties": {
                "text": {"type": "string", "minLength": 1},
                "category": {"enum": [c.value for c in InstructionCategory]},
                "protagonist": {"type": ["string", "null"]},
            },
        },
        "sidecar": {"type": "string"},
        "subtitles": {"type": "string"},
        "shot_boundaries": {"type": "string"},
        "artifacts_dir": {"type": "string"},
        "config": {"type": "object"},
    },
    "additionalProperties": False,
}


class ManifestError(ValueError):
    """Raised for missing, malformed or inconsistent manifest input."""


@dataclass
class Project:
    """A loaded manifest with resolved paths and merged configuration."""

    root: Path
    footage: MediaRef
    music: MediaRef
    instruction: Instruction
    config: PipelineConfig
    sidecar_path: Optional[Path] = None
    subtitles_path: Optional[Path] = None
    shot_boundaries_path: Optional[Path] = None
    artifacts_dir: Path = field(default_factory=lambda: Path("artifacts"))


def _media_duration(path: Path, declared: Optional[float], kind: MediaKind) -> float:
    if declared is not None:
        return float(declared)
    if not path.exists():
        raise ManifestError(
            f"{kind.value} file {path} does not exist and the manifest declares no duration"
        )
    if kind is MediaKind.AUDIO:
        from .audio.wavio import wav_duration

        return wav_duration(path)
    from .footage.shots import probe_video_duration

    return probe_video_duration(path)


def load_manifest(path: str | Path, config_overrides: Optional[dict] = None) -> Project:
    """Parse, validate and resolve a manifest file into a Project."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ManifestError(f"manifest not found: {path}")
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON: {exc}")

    try:
        jsonschema.validate(raw, MANIFEST_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ManifestError(f"manifest schema violation: {exc.message}")

    root = path.parent.resolve()

    def resolve(p: Optional[str]) -> Optional[Path]:
        return (root / p).resolve() if p else None

    config = PipelineConfig()
    try:
        config.apply(raw.get("config", {}))
        if config_overrides:
            config.apply(config_overrides)
    except (KeyError, TypeError) as exc:
        raise ManifestError(f"bad config override: {exc}")

    music_path = resolve(raw["music"]["path"])
    footage_path = resolve(raw["footage"]["path"])
    music = MediaRef(
        id=raw["music"].get("id", "music"),
        path=str(music_path),
        duration=_media_duration(music_path, raw["music"].get("duration"), MediaKind.AUDIO),
        kind=MediaKind.AUDIO,
    )
    footage = MediaRef(
        id=raw["footage"].get("id", "footage"),
        path=str(footage_path),
        duration=_media_duration(footage_path, raw["footage"].get("duration"), MediaKind.VIDEO),
        kind=MediaKind.VIDEO,
    )

    instr = raw["instruction"]
    instruction = Instruction(
        text=instr["text"],
        category=InstructionCategory(instr.get("category", "unspecified")),
        protagonist=instr.get("protagonist"),
    )

    artifacts = raw.get("artifacts_dir", "artifacts")
    return Project(
        root=root,
        footage=footage,
        music=music,
        instruction=instruction,
        config=config,
        sidecar_path=resolve(raw.get("sidecar")),
        subtitles_path=resolve(raw.get("subtitles")),
        shot_boundaries_path=resolve(raw.get("shot_boundaries")),
        artifacts_dir=(root / artifacts).resolve(),
    )
