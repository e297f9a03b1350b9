"""Versioned JSON artifacts: the on-disk API between pipeline stages.

Each stage writes one artifact keyed by a hash of its inputs (upstream
artifact keys, file content hashes, the relevant config slice). A stage
re-run with an unchanged key is a cache hit and does no work, which is
what makes the CLI resumable and keeps provider calls idempotent.

Serialization is canonical (sorted keys, fixed separators, trailing
newline) so identical runs produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Optional

SCHEMA_VERSION = 1


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def content_key(payload: Any) -> str:
    """Stable hash of any JSON-serializable value."""
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def file_key(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class ArtifactStore:
    """Reads and writes stage artifacts under one directory."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)

    def path(self, name: str) -> Path:
        return self.directory / f"{name}.json"

    def write(self, name: str, key: str, data: Any) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        doc = {"artifact": name, "schema_version": SCHEMA_VERSION, "key": key, "data": data}
        out = self.path(name)
        out.write_text(canonical_json(doc), encoding="utf-8")
        return out

    def read(self, name: str) -> Optional[dict]:
        p = self.path(name)
        if not p.exists():
            return None
        doc = json.loads(p.read_text(encoding="utf-8"))
        if doc.get("schema_version") != SCHEMA_VERSION:
            return None
        return doc

    def cached(self, name: str, key: str) -> Optional[Any]:
        """Return the stored data iff the stored key matches."""
        doc = self.read(name)
        if doc is not None and doc.get("key") == key:
            return doc["data"]
        return None
