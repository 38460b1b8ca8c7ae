"""Vocabulary file handling mirroring the feature-file contract.

The hash covers objects, scenes and the two privacy classes in canonical
JSON form; the consumer refuses feature files whose header hash does not
match its own vocabulary.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass


@dataclass(frozen=True)
class Vocabulary:
    object_names: tuple[str, ...]
    scene_names: tuple[str, ...]

    @property
    def n_objects(self) -> int:
        return len(self.object_names)

    def hash(self) -> str:
        payload = json.dumps({
            "objects": list(self.object_names),
            "scenes": list(self.scene_names),
            "privacy": ["public", "private"],
        }, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def load_vocabulary(path: str) -> Vocabulary:
    with open(path, encoding="utf-8") as f:
        raw = json.load(f)
    return Vocabulary(tuple(raw["objects"]), tuple(raw["scenes"]))
