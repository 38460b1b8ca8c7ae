"""Synthetic datasets with a planted, known decision rule.

An image is private iff (cardinality of category 0 >= 2) or (the first
scene-logit block dominates the second); which clauses actually fire is
controlled per class so single-modality models stay solvable. Rule modes
restrict the signal to one modality:

* ``both``: both clauses carry the label;
* ``cardinality_only``: scene logits are class-independent noise;
* ``scene_only``: cardinalities are class-independent noise, the label
  lives solely in the features the privacy nodes see.

Observed labels are flipped with probability ``noise`` after features are
generated. Every image additionally shows exactly three background
categories with one instance each, so the planted count signal stays
unambiguous under sum pooling.
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from ..feature_store import (Dataset, Detection, EntityVocabulary, ImageRecord,
                             default_vocabulary)
from ..rng import STREAM_SYNTH, stream

RULES = ("both", "cardinality_only", "scene_only")
SCENE_BLOCK_A = slice(0, 20)
SCENE_BLOCK_B = slice(20, 40)
SIGNAL_CATEGORY = 0
BACKGROUND_CATEGORIES = range(1, 10)
CLAUSE_STRENGTH_DEFAULT = 0.98


def _random_bbox(rng: np.random.Generator) -> tuple[float, float, float, float]:
    x, y = rng.uniform(0, 300, size=2)
    w, h = rng.uniform(10, 100, size=2)
    return (float(x), float(y), float(w), float(h))


N_BACKGROUND = 3


def _detections(rng: np.random.Generator, signal_count: int,
                background: str) -> tuple[Detection, ...]:
    dets = [Detection(SIGNAL_CATEGORY, float(rng.uniform(0.6, 1.0)), _random_bbox(rng))
            for _ in range(signal_count)]
    if background == "fixed":
        cats = np.arange(1, 1 + N_BACKGROUND)
    else:
        cats = rng.choice(np.arange(BACKGROUND_CATEGORIES.start,
                                    BACKGROUND_CATEGORIES.stop),
                          size=N_BACKGROUND, replace=False)
    for cat in cats:
        dets.append(Detection(int(cat), float(rng.uniform(0.6, 1.0)), _random_bbox(rng)))
    return tuple(dets)


def _scene_logits(rng: np.random.Generator, n_scenes: int, dominant_a: bool) -> np.ndarray:
    logits = rng.normal(0.0, 1.0, size=n_scenes)
    block = SCENE_BLOCK_A if dominant_a else SCENE_BLOCK_B
    logits[block] += 4.0
    return logits


def make_synthetic_dataset(n_train: int = 600, n_val: int = 200, n_test: int = 200,
                           seed: int = 789, rule: str = "both", noise: float = 0.05,
                           private_fraction: float = 0.5,
                           clause_strength: float = CLAUSE_STRENGTH_DEFAULT,
                           leak: float = 0.02,
                           vocab: EntityVocabulary | None = None,
                           background: str = "sampled",
                           with_deep: bool = False, deep_dim: int = 8,
                           with_pixels: bool = False, pixel_dim: int = 192,
                           ) -> Dataset:
    """See the module docstring; ``background`` picks how the three
    background categories are chosen: freshly sampled per image, or the
    same fixed trio everywhere (minimal per-image object variation)."""
    if rule not in RULES:
        raise ValidationError(f"unknown rule mode {rule!r}; choose from {RULES}")
    if background not in ("sampled", "fixed"):
        raise ValidationError(f"unknown background mode {background!r}")
    vocab = vocab or default_vocabulary()
    rng = stream(seed, STREAM_SYNTH)
    sizes = [("train", n_train), ("val", n_val), ("test", n_test)]

    # class-conditioned embeddings for the optional deep feature vectors
    category_embeddings = rng.normal(0.0, 1.0, size=(vocab.n_objects, deep_dim))

    records = []
    counter = 0
    for split, n in sizes:
        for _ in range(n):
            true_label = int(rng.random() < private_fraction)

            def clause(active_rule: bool) -> bool:
                if not active_rule:
                    return bool(rng.random() < 0.5)  # class-independent noise
                p = clause_strength if true_label == 1 else leak
                return bool(rng.random() < p)

            card_clause = clause(rule in ("both", "cardinality_only"))
            scene_clause = clause(rule in ("both", "scene_only"))

            if rule == "scene_only":
                signal_count = int(rng.integers(0, 2))
            else:
                signal_count = int(rng.integers(2, 5)) if card_clause else int(rng.integers(0, 2))
            detections = _detections(rng, signal_count, background)
            logits = _scene_logits(rng, len(vocab.scene_names), scene_clause)

            deep = None
            if with_deep:
                deep = {}
                for cat in {d.category for d in detections}:
                    deep[cat] = category_embeddings[cat] + rng.normal(0, 0.1, deep_dim)
            pixels = None
            if with_pixels:
                pixels = rng.normal(0.0, 1.0, size=pixel_dim)
                pixels[: pixel_dim // 8] += 2.0 * true_label

            observed = true_label if rng.random() >= noise else 1 - true_label
            records.append(ImageRecord(
                id=f"synth-{counter:05d}", label=observed, detections=detections,
                scene_logits=logits, deep_object_features=deep,
                pixel_vector=pixels, split=split))
            counter += 1

    return Dataset(vocab, tuple(records), name=f"synthetic-{rule}")


def make_degeneration_dataset(n_train: int = 600, n_val: int = 200,
                              n_test: int = 200, seed: int = 789,
                              noise: float = 0.05,
                              private_fraction: float = 0.25,
                              vocab: EntityVocabulary | None = None) -> Dataset:
    """Scene-only labels over constant object content.

    Every image shows the same four single-instance categories, so models
    whose privacy-node features are zeroed or randomised have no usable
    per-image signal left at all; with the imbalanced prior their training
    collapses to a constant predictor.
    """
    vocab = vocab or default_vocabulary()
    rng = stream(seed, STREAM_SYNTH)
    records = []
    counter = 0
    for split, n in (("train", n_train), ("val", n_val), ("test", n_test)):
        for _ in range(n):
            true_label = int(rng.random() < private_fraction)
            scene_clause = bool(rng.random() < (CLAUSE_STRENGTH_DEFAULT
                                                if true_label else 0.02))
            detections = tuple(
                Detection(cat, float(rng.uniform(0.6, 1.0)), _random_bbox(rng))
                for cat in (SIGNAL_CATEGORY, 1, 2, 3))
            logits = _scene_logits(rng, len(vocab.scene_names), scene_clause)
            observed = true_label if rng.random() >= noise else 1 - true_label
            records.append(ImageRecord(
                id=f"degen-{counter:05d}", label=observed, detections=detections,
                scene_logits=logits, split=split))
            counter += 1
    return Dataset(vocab, tuple(records), name="synthetic-degeneration")
