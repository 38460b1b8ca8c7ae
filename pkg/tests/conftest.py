import numpy as np
import pytest

from privgraph.feature_store import (Dataset, Detection, EntityVocabulary,
                                     ImageRecord)


@pytest.fixture
def tiny_vocab():
    """Five object categories (person first) and eight scene names."""
    return EntityVocabulary(
        ("person", "dog", "car", "chair", "laptop"),
        tuple(f"scene_{i}" for i in range(8)),
    )


def make_record(rec_id, label, cats, vocab=None, split=None, scene=None,
                deep=None, pixels=None, confidences=None):
    """Record with one detection per entry of ``cats`` (category indices)."""
    confidences = confidences or [0.9] * len(cats)
    dets = tuple(Detection(c, conf, (10.0, 10.0, 20.0, 30.0))
                 for c, conf in zip(cats, confidences))
    return ImageRecord(id=rec_id, label=label, detections=dets,
                       scene_logits=scene, deep_object_features=deep,
                       pixel_vector=pixels, split=split)


def random_toy_dataset(rng, vocab, n_records, p_private=0.4, max_cat_count=3,
                       split="train"):
    records = []
    for i in range(n_records):
        label = int(rng.random() < p_private)
        cats = []
        for cat in range(vocab.n_objects):
            cats.extend([cat] * int(rng.integers(0, max_cat_count + 1))
                        if rng.random() < 0.5 else [])
        records.append(make_record(f"r{i:04d}", label, cats, split=split))
    return Dataset(vocab, tuple(records), name="toy")


@pytest.fixture
def toy_dataset(tiny_vocab):
    rng = np.random.default_rng(42)
    return random_toy_dataset(rng, tiny_vocab, 50)
