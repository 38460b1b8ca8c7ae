"""Per-image node feature initialization for the graph models.

Two schemes exist. The interpretable scheme gives each object node its
instance count and each privacy node one element of a two-vector derived
from the scene logits (or zeros/random in ablations), optionally prefixed
by a node-type flag. The deep scheme gives detected object nodes a deep
feature vector (last instance per category wins), undetected ones zeros,
and privacy nodes a shared image-level vector, prefixed by a two-element
type one-hot unless disabled.
"""

from __future__ import annotations

import numpy as np

from ..errors import DataMismatchError
from ..feature_store import EntityVocabulary, ImageRecord, cardinality_vector
from ..rng import per_record_stream


def init_node_features_cardinality(record: ImageRecord, vocab: EntityVocabulary,
                                   scene_pair: np.ndarray,
                                   node_type_flag: bool = True) -> np.ndarray:
    """(K, D) matrix with object rows [flag, C_v] and privacy rows [flag, s_v]."""
    k_o = vocab.n_objects
    scene_pair = np.asarray(scene_pair, dtype=np.float64)
    if scene_pair.shape != (2,):
        raise DataMismatchError(f"scene pair must have shape (2,), got {scene_pair.shape}")
    counts = cardinality_vector(record, vocab)
    if node_type_flag:
        x = np.zeros((vocab.n_nodes, 2))
        x[:k_o, 1] = counts
        x[k_o:, 0] = 1.0
        x[k_o:, 1] = scene_pair
    else:
        x = np.zeros((vocab.n_nodes, 1))
        x[:k_o, 0] = counts
        x[k_o:, 0] = scene_pair
    return x


def init_node_features_deep(record: ImageRecord, vocab: EntityVocabulary,
                            privacy_vector: np.ndarray, deep_dim: int,
                            node_type_flag: bool = True) -> np.ndarray:
    """(K, D) matrix from per-category deep features.

    Detected categories carry the feature vector of their last detection
    instance; undetected ones a zero vector; both privacy nodes share
    ``privacy_vector``. With the type one-hot enabled, privacy rows start
    [1, 0] and object rows [0, 1].
    """
    k_o = vocab.n_objects
    privacy_vector = np.asarray(privacy_vector, dtype=np.float64)
    if privacy_vector.shape != (deep_dim,):
        raise DataMismatchError(
            f"privacy vector has shape {privacy_vector.shape}, expected ({deep_dim},)")
    offset = 2 if node_type_flag else 0
    x = np.zeros((vocab.n_nodes, offset + deep_dim))
    if node_type_flag:
        x[:k_o, 1] = 1.0
        x[k_o:, 0] = 1.0

    detected = {d.category for d in record.detections}
    feats = record.deep_object_features or {}
    for cat in detected:
        if cat not in feats:
            raise DataMismatchError(
                f"record {record.id!r}: detected category {cat} has no deep features")
        vec = feats[cat]
        if vec.shape != (deep_dim,):
            raise DataMismatchError(
                f"record {record.id!r}: deep feature width {vec.shape[0]} != {deep_dim}")
        x[cat, offset:] = vec
    x[k_o:, offset:] = privacy_vector
    return x


def random_privacy_pair(record_id: str, seed: int) -> np.ndarray:
    """Per-image random privacy feature, stable under reordering.

    One value is drawn per image and shared by both privacy nodes,
    matching the ablation that replaces their features with "a random
    value"; the draw depends only on (seed, record id).
    """
    value = per_record_stream(seed, record_id).random()
    return np.array([value, value])
