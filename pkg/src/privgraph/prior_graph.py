"""Dataset-level prior graphs over object and privacy nodes.

Two sub-graphs are estimated from the training split only:

* a weighted bipartite sub-graph whose entry for (object v, class y) is
  the fraction of class-y training images containing at least one
  detection of v, mirrored to keep the matrix symmetric;
* an object-object co-occurrence sub-graph; the combined graph stores the
  fraction of training images in which both categories appear, which
  binarises to the "co-occur at least once" criterion.

The combined graph carries both blocks and is masked down to what a
specific model consumes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataMismatchError, SchemaError, ValidationError
from .feature_store import PRIVATE, PUBLIC, EntityVocabulary, ImageRecord

PROVENANCES = ("frequency-bipartite", "cooccurrence", "combined",
               "masked-bipartite", "masked-objects", "zero")


@dataclass(frozen=True)
class PriorGraph:
    adjacency: np.ndarray
    vocab_hash: str
    weighted: bool
    provenance: str
    n_objects: int

    def __post_init__(self):
        a = self.adjacency
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValidationError(f"adjacency must be square, got {a.shape}")
        if self.provenance not in PROVENANCES:
            raise ValidationError(f"unknown provenance {self.provenance!r}")

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def node_kinds(self) -> list[str]:
        return ["object"] * self.n_objects + ["privacy"] * (self.n_nodes - self.n_objects)

    def privacy_object_mask(self) -> np.ndarray:
        """Boolean (K_p, K_o): which objects are adjacent to each privacy node."""
        return self.adjacency[self.n_objects:, :self.n_objects] != 0.0


@dataclass(frozen=True)
class DirectionalAdjacency:
    """Adjacency split into outgoing and incoming halves for gated propagation."""

    outgoing: np.ndarray
    incoming: np.ndarray


def _appearance_matrix(records: Sequence[ImageRecord], k_o: int) -> np.ndarray:
    """Boolean (n_records, K_o): category appears (>= 1 detection) per image."""
    present = np.zeros((len(records), k_o), dtype=bool)
    for row, rec in enumerate(records):
        for cat in rec.distinct_categories():
            present[row, cat] = True
    return present


def build_frequency_graph(train: Sequence[ImageRecord],
                          vocab: EntityVocabulary) -> PriorGraph:
    """Weighted bipartite graph relating objects to the two privacy nodes."""
    if not train:
        raise ValidationError("cannot build a prior graph from an empty training split")
    k_o, k = vocab.n_objects, vocab.n_nodes
    labels = np.array([r.label for r in train])
    present = _appearance_matrix(train, k_o)

    adjacency = np.zeros((k, k), dtype=np.float64)
    for y in (PUBLIC, PRIVATE):
        members = labels == y
        m_y = int(members.sum())
        if m_y == 0:
            raise ValidationError(f"training split has no images of class {y}")
        freq = present[members].sum(axis=0) / m_y
        adjacency[:k_o, k_o + y] = freq
        adjacency[k_o + y, :k_o] = freq
    return PriorGraph(adjacency, vocab.hash(), weighted=True,
                      provenance="frequency-bipartite", n_objects=k_o)


def build_cooccurrence_graph(train: Sequence[ImageRecord],
                             vocab: EntityVocabulary) -> PriorGraph:
    """Binary graph with an edge where two categories co-occur in some image."""
    if not train:
        raise ValidationError("cannot build a prior graph from an empty training split")
    k_o, k = vocab.n_objects, vocab.n_nodes
    present = _appearance_matrix(train, k_o).astype(np.float64)
    pair_counts = present.T @ present
    adjacency = np.zeros((k, k), dtype=np.float64)
    adjacency[:k_o, :k_o] = (pair_counts > 0).astype(np.float64)
    np.fill_diagonal(adjacency, 0.0)
    return PriorGraph(adjacency, vocab.hash(), weighted=False,
                      provenance="cooccurrence", n_objects=k_o)


def build_combined_graph(train: Sequence[ImageRecord],
                         vocab: EntityVocabulary) -> PriorGraph:
    """Frequency bipartite block plus weighted object co-occurrence block.

    Object-object entries hold the fraction of training images containing
    both categories, so masking and binarising recovers the unweighted
    co-occurrence graph exactly.
    """
    freq = build_frequency_graph(train, vocab)
    k_o = vocab.n_objects
    present = _appearance_matrix(train, k_o).astype(np.float64)
    pair_frac = (present.T @ present) / len(train)
    adjacency = freq.adjacency.copy()
    adjacency[:k_o, :k_o] = pair_frac
    adjacency[:k_o, :k_o][np.diag_indices(k_o)] = 0.0
    return PriorGraph(adjacency, vocab.hash(), weighted=True,
                      provenance="combined", n_objects=k_o)


def zero_graph(vocab: EntityVocabulary) -> PriorGraph:
    """Edge-free graph for graph-ablation runs."""
    k = vocab.n_nodes
    return PriorGraph(np.zeros((k, k)), vocab.hash(), weighted=False,
                      provenance="zero", n_objects=vocab.n_objects)


def mask_and_binarise(graph: PriorGraph, mode: str) -> PriorGraph:
    """Project the combined graph onto the sub-graph one model consumes.

    ``gip-bipartite`` keeps only object-privacy entries with their weights;
    ``gpa-objects`` keeps only object-object entries and maps every
    non-zero weight to 1.
    """
    k_o = graph.n_objects
    adjacency = graph.adjacency.copy()
    if mode == "gip-bipartite":
        adjacency[:k_o, :k_o] = 0.0
        adjacency[k_o:, k_o:] = 0.0
        provenance, weighted = "masked-bipartite", True
    elif mode == "gpa-objects":
        adjacency[k_o:, :] = 0.0
        adjacency[:, k_o:] = 0.0
        adjacency = (adjacency != 0.0).astype(np.float64)
        provenance, weighted = "masked-objects", False
    else:
        raise ValidationError(f"unknown mask mode {mode!r}")
    return PriorGraph(adjacency, graph.vocab_hash, weighted=weighted,
                      provenance=provenance, n_objects=k_o)


def split_directional(graph: PriorGraph) -> DirectionalAdjacency:
    """Outgoing half is the adjacency itself, incoming half its transpose."""
    a = graph.adjacency
    return DirectionalAdjacency(outgoing=a.copy(), incoming=a.T.copy())


# -- serialization -----------------------------------------------------------


def save_graph(graph: PriorGraph, path: str) -> None:
    payload = {
        "K": graph.n_nodes,
        "node_kinds": graph.node_kinds,
        "adjacency": graph.adjacency.reshape(-1).tolist(),
        "provenance": graph.provenance,
        "weighted": graph.weighted,
        "vocab_hash": graph.vocab_hash,
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f)


def load_graph(path: str, expected_vocab_hash: str | None = None) -> PriorGraph:
    try:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
    except FileNotFoundError as e:
        raise SchemaError(f"graph file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise SchemaError(f"graph file is not valid JSON: {e}") from e
    try:
        k = int(raw["K"])
        adjacency = np.asarray(raw["adjacency"], dtype=np.float64).reshape(k, k)
        kinds = raw["node_kinds"]
        graph = PriorGraph(adjacency, raw["vocab_hash"], bool(raw["weighted"]),
                           raw["provenance"], n_objects=kinds.count("object"))
    except (KeyError, ValueError) as e:
        raise SchemaError(f"graph file misses or mangles field: {e}") from e
    if expected_vocab_hash is not None and graph.vocab_hash != expected_vocab_hash:
        raise DataMismatchError(
            "graph was built for a different vocabulary "
            f"({graph.vocab_hash[:12]}... != {expected_vocab_hash[:12]}...)")
    return graph
