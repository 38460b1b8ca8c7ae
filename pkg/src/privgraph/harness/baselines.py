"""Rule-based and degenerate reference predictors."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import ConfigError
from ..feature_store import PRIVATE, PUBLIC, EntityVocabulary, ImageRecord
from ..rng import STREAM_BASELINE, stream

RULES = ("all_public", "all_private", "random", "pcs2", "pcs3")


def _person_cardinality(record: ImageRecord, vocab: EntityVocabulary) -> int:
    person = vocab.person_index
    return sum(1 for d in record.detections if d.category == person)


def baseline_predict(kind: str, record: ImageRecord, vocab: EntityVocabulary,
                     rng: np.random.Generator | None = None) -> int:
    if kind == "all_public":
        return PUBLIC
    if kind == "all_private":
        return PRIVATE
    if kind == "random":
        if rng is None:
            raise ConfigError("the random baseline needs a seeded generator")
        return int(rng.integers(0, 2))
    if kind == "pcs2":
        return PRIVATE if _person_cardinality(record, vocab) >= 1 else PUBLIC
    if kind == "pcs3":
        n = _person_cardinality(record, vocab)
        return PRIVATE if 1 <= n <= 2 else PUBLIC
    raise ConfigError(f"unknown baseline rule {kind!r}; choose from {RULES}")


def baseline_predict_all(kind: str, records: Sequence[ImageRecord],
                         vocab: EntityVocabulary, seed: int = 789) -> np.ndarray:
    rng = stream(seed, STREAM_BASELINE)
    return np.array([baseline_predict(kind, r, vocab, rng) for r in records],
                    dtype=np.int64)
