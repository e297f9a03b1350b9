"""Uniform interface to multimodal model backends.

Every model call in the pipeline goes through :class:`Provider.complete`,
which returns schema-validated structured output. The deterministic
:class:`MockProvider` lets the whole pipeline run offline; the
:class:`HttpProvider` speaks the OpenAI-compatible chat-completions shape.
"""

from .base import (
    Attachment,
    AttachmentKind,
    CredentialError,
    ModelRequest,
    ModelResponse,
    Provider,
    ProviderError,
    SchemaViolationError,
    Task,
    TransportError,
    extract_context,
    render_prompt,
)
from .mock import MockProvider, ScriptedProvider, Sidecar
from .http import HttpProvider

__all__ = [
    "Attachment",
    "AttachmentKind",
    "CredentialError",
    "HttpProvider",
    "MockProvider",
    "ModelRequest",
    "ModelResponse",
    "Provider",
    "ProviderError",
    "SchemaViolationError",
    "ScriptedProvider",
    "Sidecar",
    "Task",
    "TransportError",
    "extract_context",
    "render_prompt",
]
