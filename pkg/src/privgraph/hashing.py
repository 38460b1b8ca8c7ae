"""Deterministic hashing helpers for manifests, vocabularies and configs."""

from __future__ import annotations

import hashlib
import json
from typing import Any


def canonical_json(obj: Any) -> str:
    """Serialize to JSON with a stable key order and no insignificant whitespace."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def hash_of(obj: Any) -> str:
    """Stable hash of any JSON-serializable object."""
    return sha256_text(canonical_json(obj))


def stable_int_hash(text: str) -> int:
    """Platform-stable 64-bit integer hash of a string (e.g. a record id)."""
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")
