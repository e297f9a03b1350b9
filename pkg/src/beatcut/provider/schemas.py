"""Response schemas, one per provider task.

Downstream modules never parse raw model text: every response is checked
against its task schema before anything consumes it.
"""

from __future__ import annotations

import json
import re
from typing import Any, Optional

import jsonschema

_SALIENCE = {"type": "number", "minimum": 0, "maximum": 1}

TASK_SCHEMAS: dict[str, dict[str, Any]] = {
    "shot_caption": {
        "type": "object",
        "required": ["cinematography", "shot_scale", "characters", "environment", "action"],
        "properties": {
            "cinematography": {"type": "string"},
            "shot_scale": {"type": "string"},
            "characters": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["name", "salience"],
                    "properties": {"name": {"type": "string"}, "salience": _SALIENCE},
                },
            },
            "environment": {"type": "string"},
            "action": {"type": "string"},
        },
    },
    "scene_summary": {
        "type": "object",
        "required": ["summary"],
        "properties": {"summary": {"type": "string", "minLength": 1}},
    },
    "identity_inference": {
        "type": "object",
        "required": ["identities"],
        "properties": {
            "identities": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["name"],
                    "properties": {
                        "name": {"type": "string", "minLength": 1},
                        "role": {"type": "string"},
                        "aliases": {"type": "array", "items": {"type": "string"}},
                    },
                },
            }
        },
    },
    "music_structure": {
        "type": "object",
        "required": ["units"],
        "properties": {
            "units": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "object",
                    "required": ["start", "end", "label"],
                    "properties": {
                        "start": {"type": "number", "minimum": 0},
                        "end": {"type": "number", "minimum": 0},
                        "label": {"type": "string", "minLength": 1},
                        "caption": {"type": "string"},
                    },
                },
            }
        },
    },
    "music_caption": {
        "type": "object",
        "required": ["caption"],
        "properties": {"caption": {"type": "string", "minLength": 1}},
    },
    "allocation": {
        "type": "object",
        "required": ["assignments", "storyline"],
        "properties": {
            "assignments": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["unit_id", "scene_ids"],
                    "properties": {
                        "unit_id": {"type": "string"},
                        "scene_ids": {"type": "array", "items": {"type": "string"}},
                    },
                },
            },
            "storyline": {"type": "string", "minLength": 1},
        },
    },
    "shot_plan": {
        "type": "object",
        "required": ["slots"],
        "properties": {
            "slots": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["scene_id", "description"],
                    "properties": {
                        "scene_id": {"type": "string"},
                        "description": {"type": "string"},
                    },
                },
            }
        },
    },
    "identity_check": {
        "type": "object",
        "required": ["present", "salient"],
        "properties": {"present": {"type": "boolean"}, "salient": {"type": "boolean"}},
    },
    "quality_check": {
        "type": "object",
        "required": ["score"],
        "properties": {
            "score": {"type": "number", "minimum": 0, "maximum": 1},
            "detail": {"type": "string"},
        },
    },
    "trim_feedback": {
        "type": "object",
        "required": ["frames"],
        "properties": {
            "frames": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["t", "aes", "presence"],
                    "properties": {
                        "t": {"type": "number"},
                        "aes": _SALIENCE,
                        "presence": _SALIENCE,
                    },
                },
            }
        },
    },
}

_FENCE = re.compile(r"^```(?:json)?\s*(.*?)\s*```$", re.DOTALL)


def strip_fences(raw: str) -> str:
    """Remove a markdown code fence, which chat models like to add."""
    m = _FENCE.match(raw.strip())
    return m.group(1) if m else raw


def parse_response(raw: str, schema_id: str) -> tuple[Optional[Any], Optional[str]]:
    """Parse and schema-check raw model output.

    Returns (parsed, None) on success or (None, error message) on failure;
    the error message is what gets appended to the repair reprompt.
    """
    schema = TASK_SCHEMAS.get(schema_id)
    if schema is None:
        return None, f"unknown schema id {schema_id!r}"
    try:
        parsed = json.loads(strip_fences(raw))
    except json.JSONDecodeError as exc:
        return None, f"response is not valid JSON: {exc}"
    try:
        jsonschema.validate(parsed, schema)
    except jsonschema.ValidationError as exc:
        return None, f"response violates the {schema_id} schema: {exc.message}"
    return parsed, None
