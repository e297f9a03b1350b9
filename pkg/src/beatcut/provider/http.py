"""OpenAI-compatible HTTP backend.

Speaks the chat-completions wire shape against any compatible endpoint.
Configuration comes from environment variables:

* ``BEATCUT_API_BASE`` - base URL, e.g. ``https://api.example.com/v1``
* ``BEATCUT_API_KEY``  - bearer token
* ``BEATCUT_MODEL``    - default model name
* ``BEATCUT_MODEL_<TASK>`` - optional per-task model override, e.g.
  ``BEATCUT_MODEL_ALLOCATION`` routes planning to a different model.

Frame attachments whose payloads carry image paths are inlined as data
URLs; everything else is forwarded as JSON text parts.
"""

from __future__ import annotations

import base64
import mimetypes
import os
from pathlib import Path
from typing import Any, Callable, Optional

import requests

from ..config import ProviderConfig
from .base import (
    Attachment,
    AttachmentKind,
    CredentialError,
    ModelRequest,
    Provider,
    ProviderError,
    TransportError,
)

_RETRYABLE_STATUS = {408, 409, 429, 500, 502, 503, 504}

_SYSTEM_PROMPT = (
    "You are a video editing assistant. Respond with a single JSON object "
    "matching the requested schema. Do not add prose around the JSON."
)


def _image_part(path: str) -> dict[str, Any]:
    data = Path(path).read_bytes()
    mime = mimetypes.guess_type(path)[0] or "image/jpeg"
    b64 = base64.b64encode(data).decode("ascii")
    return {"type": "image_url", "image_url": {"url": f"data:{mime};base64,{b64}"}}


class HttpProvider(Provider):
    """Chat-completions client with bearer auth and JSON response mode."""

    def __init__(
        self,
        config: Optional[ProviderConfig] = None,
        base_url: Optional[str] = None,
        api_key: Optional[str] = None,
        model: Optional[str] = None,
        post: Callable[..., requests.Response] = requests.post,
        timeout: float = 120.0,
        sleep=None,
    ):
        kwargs = {"sleep": sleep} if sleep is not None else {}
        super().__init__(config=config, **kwargs)
        self.base_url = (base_url or os.environ.get("BEATCUT_API_BASE", "")).rstrip("/")
        self.api_key = api_key or os.environ.get("BEATCUT_API_KEY", "")
        self.model = model or os.environ.get("BEATCUT_MODEL", "")
        self._post = post
        self.timeout = timeout
        self.id = f"http:{self.model or 'unset'}"

    def _model_for(self, request: ModelRequest) -> str:
        override = os.environ.get(f"BEATCUT_MODEL_{request.task.value.upper()}")
        return override or self.model

    def _content_parts(self, request: ModelRequest, repair_note: Optional[str]) -> list[dict]:
        parts: list[dict[str, Any]] = [{"type": "text", "text": request.prompt}]
        for att in request.attachments:
            if att.kind is AttachmentKind.FRAMES and isinstance(att.payload, dict):
                for p in att.payload.get("paths", []):
                    parts.append(_image_part(p))
                if not att.payload.get("paths"):
                    parts.append({"type": "text", "text": f"[frames] {att.payload_json()}"})
            else:
                parts.append({"type": "text", "text": f"[{att.kind.value}] {att.payload_json()}"})
        if repair_note:
            parts.append({
                "type": "text",
                "text": f"Your previous reply was rejected: {repair_note}. "
                        f"Reply again with one valid JSON object only.",
            })
        return parts

    def _generate(self, request: ModelRequest, repair_note: Optional[str]) -> str:
        if not self.base_url:
            raise CredentialError("BEATCUT_API_BASE is not set")
        if not self.api_key:
            raise CredentialError("BEATCUT_API_KEY is not set")
        model = self._model_for(request)
        if not model:
            raise CredentialError("BEATCUT_MODEL is not set")
        body = {
            "model": model,
            "messages": [
                {"role": "system", "content": _SYSTEM_PROMPT},
                {"role": "user", "content": self._content_parts(request, repair_note)},
            ],
            "response_format": {"type": "json_object"},
            "temperature": 0,
        }
        try:
            resp = self._post(
                f"{self.base_url}/chat/completions",
                json=body,
                headers={"Authorization": f"Bearer {self.api_key}"},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise TransportError(f"request failed: {exc}")
        if resp.status_code in _RETRYABLE_STATUS:
            raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        if resp.status_code != 200:
            raise ProviderError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise TransportError(f"malformed completion payload: {exc}")
