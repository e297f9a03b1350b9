"""Provider plumbing: request/response types, retries and schema repair.

The contract every backend honors:

* transient transport failures are retried with exponential backoff, up
  to ``ProviderConfig.max_attempts`` total attempts;
* output that fails its task schema triggers exactly one reprompt with
  the validation error appended, then a hard error;
* a global semaphore caps in-flight requests across threads.

Machine-readable call context is embedded into the prompt as a canonical
JSON block (see :func:`render_prompt`), so a provider is a pure function
of (task, prompt, attachments) and the deterministic mock can recover
the context without a side channel.
"""

from __future__ import annotations

import json
import threading
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Mapping, Optional, Sequence

from ..config import ProviderConfig
from .schemas import parse_response


class Task(str, Enum):
    SHOT_CAPTION = "shot_caption"
    SCENE_SUMMARY = "scene_summary"
    IDENTITY_INFERENCE = "identity_inference"
    MUSIC_STRUCTURE = "music_structure"
    MUSIC_CAPTION = "music_caption"
    ALLOCATION = "allocation"
    SHOT_PLAN = "shot_plan"
    IDENTITY_CHECK = "identity_check"
    QUALITY_CHECK = "quality_check"
    TRIM_FEEDBACK = "trim_feedback"


class AttachmentKind(str, Enum):
    FRAMES = "frames"
    AUDIO_SEGMENT = "audio_segment"
    TEXT = "text"


# Which attachment kinds each task accepts; the first listed kind is
# required when the row is marked mandatory.
_ALLOWED_KINDS: dict[Task, tuple[set[AttachmentKind], bool]] = {
    Task.SHOT_CAPTION: ({AttachmentKind.FRAMES}, True),
    Task.SCENE_SUMMARY: ({AttachmentKind.TEXT}, False),
    Task.IDENTITY_INFERENCE: ({AttachmentKind.TEXT}, False),
    Task.MUSIC_STRUCTURE: ({AttachmentKind.AUDIO_SEGMENT}, True),
    Task.MUSIC_CAPTION: ({AttachmentKind.AUDIO_SEGMENT}, False),
    Task.ALLOCATION: ({AttachmentKind.TEXT}, False),
    Task.SHOT_PLAN: ({AttachmentKind.TEXT}, False),
    Task.IDENTITY_CHECK: ({AttachmentKind.FRAMES}, True),
    Task.QUALITY_CHECK: ({AttachmentKind.FRAMES}, True),
    Task.TRIM_FEEDBACK: ({AttachmentKind.FRAMES}, True),
}


class ProviderError(RuntimeError):
    """Base class for provider failures."""


class TransportError(ProviderError):
    """A transient transport problem; safe to retry."""


class SchemaViolationError(ProviderError):
    """Model output failed validation even after the repair reprompt."""


class CredentialError(ProviderError):
    """Provider is not configured (missing endpoint or key)."""


@dataclass(frozen=True)
class Attachment:
    kind: AttachmentKind
    payload: Any  # JSON-serializable reference (paths, timestamps, hashes...)

    def payload_json(self) -> str:
        return json.dumps(self.payload, sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class ModelRequest:
    task: Task
    prompt: str
    attachments: tuple[Attachment, ...] = ()
    schema_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "attachments", tuple(self.attachments))
        if not self.schema_id:
            object.__setattr__(self, "schema_id", self.task.value)
        allowed, required = _ALLOWED_KINDS[self.task]
        kinds = {a.kind for a in self.attachments}
        bad = kinds - allowed
        if bad:
            raise ValueError(
                f"task {self.task.value} does not accept {sorted(k.value for k in bad)} attachments"
            )
        if required and not kinds:
            raise ValueError(f"task {self.task.value} requires a {next(iter(allowed)).value} attachment")


@dataclass(frozen=True)
class ModelResponse:
    raw: str
    parsed: Any
    provider_id: str
    latency: float


CONTEXT_HEADER = "### context (json) ###"


def render_prompt(instruction: str, context: Mapping[str, Any]) -> str:
    """Compose a prompt from human-readable instructions plus a context block."""
    block = json.dumps(context, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return f"{instruction}\n\n{CONTEXT_HEADER}\n{block}"


def extract_context(prompt: str) -> dict[str, Any]:
    """Recover the context block from a rendered prompt (empty dict if none)."""
    if CONTEXT_HEADER not in prompt:
        return {}
    block = prompt.split(CONTEXT_HEADER, 1)[1].strip()
    try:
        parsed = json.loads(block)
    except json.JSONDecodeError:
        return {}
    return parsed if isinstance(parsed, dict) else {}


@dataclass
class ProviderStats:
    completed: list[Task] = field(default_factory=list)
    generate_calls: int = 0


class Provider(ABC):
    """Base class running the retry / schema-repair loop around a backend."""

    id: str = "provider"

    def __init__(self, config: Optional[ProviderConfig] = None,
                 sleep: Callable[[float], None] = time.sleep):
        self.config = config or ProviderConfig()
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(max(1, self.config.concurrency))
        self._lock = threading.Lock()
        self.stats = ProviderStats()

    @abstractmethod
    def _generate(self, request: ModelRequest, repair_note: Optional[str]) -> str:
        """Produce raw model text for one request. May raise TransportError."""

    def complete(self, request: ModelRequest) -> ModelResponse:
        with self._slots:
            start = time.monotonic()
            raw = self._attempt(request, repair_note=None)
            parsed, error = parse_response(raw, request.schema_id)
            if error is not None:
                raw = self._attempt(request, repair_note=error)
                parsed, error = parse_response(raw, request.schema_id)
                if error is not None:
                    raise SchemaViolationError(
                        f"{self.id}: {request.task.value} output invalid after reprompt: {error}"
                    )
            latency = time.monotonic() - start
        with self._lock:
            self.stats.completed.append(request.task)
        return ModelResponse(raw=raw, parsed=parsed, provider_id=self.id, latency=latency)

    def _attempt(self, request: ModelRequest, repair_note: Optional[str]) -> str:
        delay = self.config.backoff_base
        last: Optional[TransportError] = None
        for attempt in range(self.config.max_attempts):
            if attempt:
                self._sleep(delay)
                delay *= 2
            try:
                with self._lock:
                    self.stats.generate_calls += 1
                return self._generate(request, repair_note)
            except TransportError as exc:
                last = exc
        raise TransportError(
            f"{self.id}: transport failed after {self.config.max_attempts} attempts: {last}"
        )
