"""Deterministic offline providers.

:class:`MockProvider` answers every task as a pure function of the
request (task, prompt, attachment payloads) plus an optional ground-truth
sidecar file. Byte-identical inputs yield byte-identical outputs across
runs and platforms, which is what makes end-to-end pipeline assertions
exact.

:class:`ScriptedProvider` replays canned responses (or injected faults)
and records every request; tests use it to exercise retry, reprompt and
backtracking paths.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Callable, Mapping, Optional, Sequence

from ..config import ProviderConfig
from .base import (
    Attachment,
    ModelRequest,
    Provider,
    ProviderError,
    Task,
    extract_context,
)


def _digest(*parts: str) -> str:
    h = hashlib.blake2b(digest_size=16)
    for p in parts:
        h.update(p.encode("utf-8"))
        h.update(b"\x1f")
    return h.hexdigest()


class Sidecar:
    """Ground truth accompanying synthetic test media.

    Maps shot ids to attributes, per-frame scores and quality; also holds
    the character roster and the music structure. The mock provider
    consults it so that pipeline output is exactly predictable.
    """

    def __init__(self, data: Mapping[str, Any], origin: str = "<memory>"):
        self.data = dict(data)
        self.origin = origin
        self._frames_index: dict[str, list[dict]] = {}
        for shot_id, shot in self.shots.items():
            self._frames_index[shot_id] = sorted(shot.get("frames", []), key=lambda f: f["t"])

    @classmethod
    def load(cls, path: str | Path) -> "Sidecar":
        p = Path(path)
        return cls(json.loads(p.read_text(encoding="utf-8")), origin=str(p))

    @property
    def shots(self) -> Mapping[str, Any]:
        return self.data.get("shots", {})

    @property
    def roster(self) -> list[dict]:
        return list(self.data.get("roster", []))

    @property
    def music_structure(self) -> list[dict]:
        return list(self.data.get("music", {}).get("structure", []))

    def shot(self, shot_id: str) -> Optional[dict]:
        return self.shots.get(shot_id)

    def frame(self, shot_id: str, t: float, tol: float = 0.26) -> Optional[dict]:
        """Nearest ground-truth frame to source time t (within tol seconds)."""
        frames = self._frames_index.get(shot_id)
        if not frames:
            return None
        best = min(frames, key=lambda f: abs(f["t"] - t))
        return best if abs(best["t"] - t) <= tol else None

    def fingerprint(self) -> str:
        return _digest(json.dumps(self.data, sort_keys=True))


class MockProvider(Provider):
    """Answers every task deterministically, without any network."""

    id = "mock"

    def __init__(self, sidecar: Optional[Sidecar] = None,
                 config: Optional[ProviderConfig] = None):
        super().__init__(config=config, sleep=lambda _t: None)
        self.sidecar = sidecar

    # -- backend ----------------------------------------------------------

    def _generate(self, request: ModelRequest, repair_note: Optional[str]) -> str:
        context = extract_context(request.prompt)
        seed = _digest(
            request.task.value,
            request.prompt,
            *[a.payload_json() for a in request.attachments],
            self.sidecar.fingerprint() if self.sidecar else "",
        )
        handler = getattr(self, f"_task_{request.task.value}")
        return json.dumps(handler(context, request.attachments, seed), sort_keys=True)

    # -- per-task behaviour ------------------------------------------------

    def _task_shot_caption(self, ctx, attachments, seed) -> dict:
        shot_id = ctx.get("shot_id", "")
        roster_names = {r.get("name") for r in ctx.get("roster", [])}
        record = self.sidecar.shot(shot_id) if self.sidecar else None
        if record and "attributes" in record:
            attrs = json.loads(json.dumps(record["attributes"]))  # deep copy
            characters = []
            for ch in attrs.get("characters", []):
                identity = ch.pop("identity", None)
                # Identity injection: the roster grounds anonymous mentions.
                if identity and identity in roster_names:
                    ch["name"] = identity
                characters.append({"name": ch["name"], "salience": float(ch.get("salience", 1.0))})
            return {
                "cinematography": attrs.get("cinematography", ""),
                "shot_scale": attrs.get("shot_scale", "medium"),
                "characters": characters,
                "environment": attrs.get("environment", ""),
                "action": attrs.get("action", ""),
            }
        return {
            "cinematography": f"static medium shot, palette {seed[:6]}",
            "shot_scale": "medium",
            "characters": [],
            "environment": f"location {seed[6:12]}",
            "action": f"activity {seed[12:18]}",
        }

    def _task_scene_summary(self, ctx, attachments, seed) -> dict:
        captions = [c for c in ctx.get("captions", []) if c]
        if not captions:
            return {"summary": f"uneventful scene {seed[:8]}"}
        return {"summary": captions[0] if len(captions) == 1 else " ".join(captions)}

    def _task_identity_inference(self, ctx, attachments, seed) -> dict:
        roster = self.sidecar.roster if self.sidecar else []
        return {"identities": [
            {"name": r["name"], "role": r.get("role", ""), "aliases": list(r.get("aliases", []))}
            for r in roster
        ]}

    def _task_music_structure(self, ctx, attachments, seed) -> dict:
        if self.sidecar and self.sidecar.music_structure:
            return {"units": [
                {"start": float(u["start"]), "end": float(u["end"]),
                 "label": u.get("label", "other"), "caption": u.get("caption", "")}
                for u in self.sidecar.music_structure
            ]}
        duration = float(ctx.get("duration", 0.0)) or 1.0
        half = duration / 2.0
        return {"units": [
            {"start": 0.0, "end": half, "label": "verse", "caption": f"steady opening {seed[:6]}"},
            {"start": half, "end": duration, "label": "chorus", "caption": f"lifted close {seed[6:12]}"},
        ]}

    def _task_music_caption(self, ctx, attachments, seed) -> dict:
        if self.sidecar:
            for u in self.sidecar.music_structure:
                if abs(float(u["start"]) - float(ctx.get("start", -1))) < 0.25 and u.get("caption"):
                    return {"caption": u["caption"]}
        label = ctx.get("label", "section")
        energy = ctx.get("energy", 0.5)
        mood = "driving and bright" if energy >= 0.5 else "calm and sparse"
        return {"caption": f"{label}: {mood}, steady pulse ({seed[:6]})"}

    def _task_allocation(self, ctx, attachments, seed) -> dict:
        units = ctx.get("units", [])
        scenes = [s["id"] for s in ctx.get("scenes", [])]
        forbidden = ctx.get("forbidden", [])
        usable = [s for s in scenes if s not in forbidden] or scenes
        weights = [max(1e-9, float(u["end"]) - float(u["start"])) for u in units]
        total = sum(weights)
        assignments, start = [], 0
        acc = 0.0
        for i, unit in enumerate(units):
            acc += weights[i]
            stop = len(usable) if i == len(units) - 1 else round(len(usable) * acc / total)
            stop = max(stop, start + 1) if start < len(usable) else start
            stop = min(stop, len(usable))
            assignments.append({"unit_id": unit["id"], "scene_ids": usable[start:stop]})
            start = stop
        storyline = (
            f"Open on {usable[0] if usable else 'the first scene'}, build through the middle "
            f"sections, close on {usable[-1] if usable else 'the finale'}."
        )
        return {"assignments": assignments, "storyline": storyline}

    def _task_shot_plan(self, ctx, attachments, seed) -> dict:
        slots = ctx.get("slots", [])
        scenes = ctx.get("scenes", [])
        if not scenes:
            return {"slots": []}
        out = []
        for i, _slot in enumerate(slots):
            scene = scenes[i % len(scenes)]
            summary = str(scene.get("summary", "")).strip()
            fragment = " ".join(summary.split()[:10]) if summary else f"scene {scene['id']}"
            out.append({"scene_id": scene["id"], "description": f"beat {i + 1}: {fragment}"})
        return {"slots": out}

    def _task_identity_check(self, ctx, attachments, seed) -> dict:
        target = ctx.get("target", "")
        frame = self.sidecar.frame(ctx.get("shot_id", ""), float(ctx.get("t", -1.0))) if self.sidecar else None
        if frame is not None:
            present = target in frame.get("visible", [])
            return {"present": present, "salient": present}
        bit = int(seed[:8], 16) % 4 != 0
        return {"present": bit, "salient": bit}

    def _task_quality_check(self, ctx, attachments, seed) -> dict:
        record = self.sidecar.shot(ctx.get("shot_id", "")) if self.sidecar else None
        if record is not None and "quality" in record:
            score = float(record["quality"])
        else:
            score = 0.5 + (int(seed[:8], 16) % 50) / 100.0
        return {"score": score, "detail": f"rubric score {score:.2f}"}

    def _task_trim_feedback(self, ctx, attachments, seed) -> dict:
        shot_id = ctx.get("shot_id", "")
        target = ctx.get("target") or ""
        frames = []
        for t in ctx.get("times", []):
            frame = self.sidecar.frame(shot_id, float(t)) if self.sidecar else None
            if frame is not None:
                aes = float(frame.get("aes", 0.5))
                presence = 1.0 if (not target or target in frame.get("visible", [])) else 0.0
            else:
                cell = _digest(seed, f"{t:.3f}")
                aes = 0.35 + (int(cell[:8], 16) % 60) / 100.0
                presence = 1.0 if (not target or int(cell[8:16], 16) % 5 != 0) else 0.0
            frames.append({"t": float(t), "aes": aes, "presence": presence})
        return {"frames": frames}


class ScriptExhaustedError(ProviderError):
    """ScriptedProvider ran out of canned responses."""


class ScriptedProvider(Provider):
    """Replays a fixed script of responses; for tests and dry runs.

    Script entries may be: a dict (serialized to JSON), a raw string, an
    Exception instance (raised as-is), or a callable taking the request
    and returning any of the former. Entries can be supplied globally or
    per task; per-task scripts win.
    """

    id = "scripted"

    def __init__(
        self,
        script: Sequence[Any] = (),
        by_task: Optional[Mapping[Task, Sequence[Any]]] = None,
        fallback: Optional[Provider] = None,
        config: Optional[ProviderConfig] = None,
    ):
        super().__init__(config=config, sleep=lambda _t: None)
        self._script = list(script)
        self._by_task = {k: list(v) for k, v in (by_task or {}).items()}
        self._fallback = fallback
        self.requests: list[ModelRequest] = []

    def _generate(self, request: ModelRequest, repair_note: Optional[str]) -> str:
        self.requests.append(request)
        queue = self._by_task.get(request.task)
        if queue:
            entry = queue.pop(0)
        elif self._script:
            entry = self._script.pop(0)
        elif self._fallback is not None:
            return self._fallback._generate(request, repair_note)
        else:
            raise ScriptExhaustedError(f"no scripted response left for {request.task.value}")
        if callable(entry) and not isinstance(entry, Exception):
            entry = entry(request)
        if isinstance(entry, Exception):
            raise entry
        if isinstance(entry, (dict, list)):
            return json.dumps(entry, sort_keys=True)
        return str(entry)
