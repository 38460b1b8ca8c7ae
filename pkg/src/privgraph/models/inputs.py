"""Dense per-split input arrays for each model family.

Feature extraction from records happens once per split; training then
slices these arrays by batch index. Missing required fields fail fast
here, before any training step runs.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import DataMismatchError
from ..feature_store import (EntityVocabulary, ImageRecord, NormalizationStats,
                             apply_normalization, cardinality_vector,
                             confidence_vector, fit_normalization)
from .features import random_privacy_pair
from .spec import ModelSpec

REQUIRED_FIELDS = {
    "s2p": ("scene_logits",),
    "s2p_mlp1": ("scene_logits",),
    "s2p_mlp2": ("scene_logits",),
    "mlp": ("detections",),
    "mlp_i": ("pixel_vector",),
    "gamlp": ("detections",),
    "baseline": ("detections",),
}


def required_fields(spec: ModelSpec) -> tuple[str, ...]:
    if spec.kind in ("gpa", "gip"):
        fields: list[str] = ["detections"] if spec.feature_scheme == "cardinality" else []
        if spec.feature_scheme == "deep":
            fields.append("deep_object_features")
        if spec.privacy_source in ("scene_layer", "deep_projection"):
            fields.append("scene_logits")
        return tuple(fields)
    return REQUIRED_FIELDS[spec.kind]


def check_required_fields(records: Sequence[ImageRecord], spec: ModelSpec) -> None:
    for name in required_fields(spec):
        if name == "detections":
            continue  # an empty detection list is legal
        for rec in records:
            if getattr(rec, name) is None:
                raise DataMismatchError(
                    f"model {spec.kind!r} requires field {name!r}, missing on "
                    f"record {rec.id!r}")


def _padded_cardinality(rec: ImageRecord, vocab: EntityVocabulary,
                        with_confidence: bool) -> np.ndarray:
    """Cardinalities over all K node positions; privacy positions stay zero."""
    vec = np.zeros(vocab.n_nodes)
    vec[:vocab.n_objects] = cardinality_vector(rec, vocab)
    if not with_confidence:
        return vec
    conf = np.zeros(vocab.n_nodes)
    conf[:vocab.n_objects] = confidence_vector(rec, vocab)
    return np.concatenate([vec, conf])


def flat_feature_vector(rec: ImageRecord, vocab: EntityVocabulary,
                        spec: ModelSpec) -> np.ndarray:
    """The raw (pre-normalization) input vector of the mlp/gamlp families."""
    if spec.kind == "mlp_i":
        if rec.pixel_vector is None:
            raise DataMismatchError(f"record {rec.id!r} carries no pixel vector")
        if rec.pixel_vector.shape != (spec.pixel_dim,):
            raise DataMismatchError(
                f"record {rec.id!r}: pixel vector length {rec.pixel_vector.shape[0]} "
                f"!= {spec.pixel_dim}")
        return rec.pixel_vector
    if spec.kind in ("s2p", "s2p_mlp1", "s2p_mlp2"):
        if rec.scene_logits is None:
            raise DataMismatchError(f"record {rec.id!r} carries no scene logits")
        return rec.scene_logits
    return _padded_cardinality(rec, vocab, spec.use_confidence)


def fit_stats_for_spec(spec: ModelSpec, train_records: Sequence[ImageRecord],
                       vocab: EntityVocabulary) -> NormalizationStats | None:
    if not spec.normalize_features:
        return None
    return fit_normalization(flat_feature_vector(r, vocab, spec) for r in train_records)


def prepare_inputs(records: Sequence[ImageRecord], vocab: EntityVocabulary,
                   spec: ModelSpec, stats: NormalizationStats | None = None,
                   seed: int = 789) -> dict[str, np.ndarray]:
    """Dense arrays consumed by ``Model.forward`` for one split."""
    check_required_fields(records, spec)
    out: dict[str, np.ndarray] = {
        "labels": np.array([r.label for r in records], dtype=np.int64)}

    if spec.kind in ("s2p", "s2p_mlp1", "s2p_mlp2", "mlp", "mlp_i"):
        x = np.stack([flat_feature_vector(r, vocab, spec) for r in records])
        if stats is not None:
            x = np.stack([apply_normalization(row, stats) for row in x])
        out["x"] = x
        return out

    if spec.kind == "gamlp":
        flat = np.stack([flat_feature_vector(r, vocab, spec) for r in records])
        if stats is not None:
            flat = np.stack([apply_normalization(row, stats) for row in flat])
        d_node = 2 if spec.use_confidence else 1
        # flat layout is [cardinalities(K), confidences(K)?]; fold into (K, d)
        out["nodes"] = np.ascontiguousarray(
            flat.reshape(len(records), d_node, vocab.n_nodes).transpose(0, 2, 1))
        return out

    if spec.kind in ("gpa", "gip"):
        if spec.feature_scheme == "cardinality":
            out["cardinality"] = np.stack(
                [cardinality_vector(r, vocab) for r in records])
        else:
            deep = np.zeros((len(records), vocab.n_objects, spec.deep_dim))
            for row, rec in enumerate(records):
                feats = rec.deep_object_features or {}
                for cat in rec.distinct_categories():
                    if cat not in feats:
                        raise DataMismatchError(
                            f"record {rec.id!r}: detected category {cat} has no "
                            "deep features")
                    if feats[cat].shape != (spec.deep_dim,):
                        raise DataMismatchError(
                            f"record {rec.id!r}: deep feature width "
                            f"{feats[cat].shape[0]} != {spec.deep_dim}")
                    deep[row, cat] = feats[cat]
            out["deep"] = deep
        if spec.privacy_source in ("scene_layer", "deep_projection"):
            missing = [r.id for r in records if r.scene_logits is None]
            if missing:
                raise DataMismatchError(
                    f"{len(missing)} records carry no scene logits, first: {missing[0]!r}")
            out["scene_logits"] = np.stack([r.scene_logits for r in records])
        if spec.privacy_source == "random":
            out["random_privacy"] = np.stack(
                [random_privacy_pair(r.id, seed) for r in records])
        return out

    raise DataMismatchError(f"no input preparation for kind {spec.kind!r}")
