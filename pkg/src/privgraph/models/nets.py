"""Trainable classifier architectures built on the numeric core.

Every model exposes the same protocol: ``forward_probs(inputs, idx,
train)`` returns the two-class probability rows for the indexed records,
``backward(dprobs)`` propagates a probability-level gradient into the
parameter store, and ``predict`` applies the argmax with ties broken
toward the public class.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, DataMismatchError
from ..feature_store import EntityVocabulary
from ..numcore.layers import BatchNormNodes, Dropout, Linear, ReLU, Softmax
from ..numcore.store import ParameterStore
from ..prior_graph import PriorGraph, mask_and_binarise, split_directional, zero_graph
from ..rng import STREAM_DROPOUT, STREAM_INIT, stream
from .grm import GRM
from .spec import ModelSpec


def predict_labels(probs: np.ndarray) -> np.ndarray:
    """Argmax over the two class probabilities; exact ties go public."""
    return (probs[:, 1] > probs[:, 0]).astype(np.int64)


class Model:
    spec: ModelSpec
    store: ParameterStore

    def forward_probs(self, inputs: dict, idx: np.ndarray,
                      train: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dprobs: np.ndarray) -> None:
        raise NotImplementedError

    def predict(self, inputs: dict, idx: np.ndarray | None = None) -> np.ndarray:
        if idx is None:
            idx = np.arange(len(inputs["labels"]))
        return predict_labels(self.forward_probs(inputs, idx, train=False))


class FeedForwardModel(Model):
    """S2P heads, the cardinality MLP and the pixel MLP share this body."""

    def __init__(self, spec: ModelSpec, vocab: EntityVocabulary, seed: int):
        self.spec = spec
        self.store = ParameterStore()
        init_rng = stream(seed, STREAM_INIT)
        drop_rng = stream(seed, STREAM_DROPOUT)
        p = spec.dropout_p

        d_in = self._input_dim(spec, vocab)
        widths, leading_dropout, hidden_dropout = self._plan(spec, d_in)

        prefix = "head" if spec.kind.startswith("s2p") else "layers"
        self.ops: list = []
        if leading_dropout:
            self.ops.append(Dropout(p, drop_rng, "dropout_in"))
        for i, (a, b) in enumerate(zip(widths, widths[1:])):
            last = i == len(widths) - 2
            self.ops.append(Linear(self.store, f"{prefix}.fc{i}", a, b, init_rng))
            if not last:
                if spec.use_batchnorm and spec.kind == "mlp":
                    self.ops.append(BatchNormNodes(self.store, f"batchnorm.bn{i}", b))
                self.ops.append(ReLU())
                if hidden_dropout:
                    self.ops.append(Dropout(p, drop_rng, f"dropout{i}"))
        self.softmax = Softmax()

    @staticmethod
    def _input_dim(spec: ModelSpec, vocab: EntityVocabulary) -> int:
        if spec.kind in ("s2p", "s2p_mlp1", "s2p_mlp2"):
            return len(vocab.scene_names)
        if spec.kind == "mlp":
            return vocab.n_nodes * (2 if spec.use_confidence else 1)
        if spec.kind == "mlp_i":
            return spec.pixel_dim
        raise ConfigError(f"{spec.kind!r} is not a feed-forward kind")

    @staticmethod
    def _plan(spec: ModelSpec, d_in: int) -> tuple[list[int], bool, bool]:
        if spec.kind == "s2p":
            return [d_in, 2], False, False
        if spec.kind == "s2p_mlp1":
            return [d_in, d_in // 2, 2], False, False
        if spec.kind == "s2p_mlp2":
            return [d_in, d_in // 2, d_in // 4, 2], False, False
        if spec.kind == "mlp_i":
            return [d_in, d_in // 2, d_in // 4, d_in // 8, 2], False, False
        widths = [d_in] + [spec.mlp_width] * spec.mlp_depth + [2]
        return widths, True, True

    def forward_probs(self, inputs, idx, train=False):
        t = inputs["x"][idx]
        for op in self.ops:
            t = op.forward(t, train)
        return self.softmax.forward(t, train)

    def backward(self, dprobs):
        dt = self.softmax.backward(dprobs)
        for op in reversed(self.ops):
            dt = op.backward(dt)


class GraphAgnosticModel(Model):
    """Graph-convolution blocks applied to isolated nodes, then sum pooling."""

    def __init__(self, spec: ModelSpec, vocab: EntityVocabulary, seed: int):
        if spec.kind != "gamlp":
            raise ConfigError(f"expected gamlp spec, got {spec.kind!r}")
        self.spec = spec
        self.store = ParameterStore()
        init_rng = stream(seed, STREAM_INIT)
        drop_rng = stream(seed, STREAM_DROPOUT)
        p = spec.dropout_p
        w = spec.mlp_width
        d_node = 2 if spec.use_confidence else 1

        self.drop_in = Dropout(p, drop_rng, "dropout_in")
        self.transform = (Linear(self.store, "transform.fc", d_node, w, init_rng)
                          if spec.input_transform else None)
        block_in = w if spec.input_transform else d_node
        self.blocks: list[list] = []
        for i, (a, b) in enumerate(zip([block_in, w, w], [w, w, w])):
            ops: list = [Linear(self.store, f"blocks.fc{i}", a, b, init_rng)]
            if spec.use_batchnorm:
                ops.append(BatchNormNodes(self.store, f"batchnorm.bn{i}", vocab.n_nodes))
            ops.append(ReLU())
            ops.append(Dropout(p, drop_rng, f"dropout{i}"))
            self.blocks.append(ops)
        self.head = [Linear(self.store, "head.fc0", w, w // 2, init_rng), ReLU(),
                     Linear(self.store, "head.fc1", w // 2, w // 4, init_rng), ReLU(),
                     Linear(self.store, "head.fc2", w // 4, 2, init_rng)]
        self.softmax = Softmax()
        self._n_nodes = vocab.n_nodes

    def forward_probs(self, inputs, idx, train=False):
        t = self.drop_in.forward(inputs["nodes"][idx], train)
        if self.transform is not None:
            t = self.transform.forward(t, train)
        for ops in self.blocks:
            for op in ops:
                t = op.forward(t, train)
        pooled = t.sum(axis=1)
        for op in self.head:
            pooled = op.forward(pooled, train)
        return self.softmax.forward(pooled, train)

    def backward(self, dprobs):
        dt = self.softmax.backward(dprobs)
        for op in reversed(self.head):
            dt = op.backward(dt)
        dt = np.repeat(dt[:, None, :], self._n_nodes, axis=1)
        for ops in reversed(self.blocks):
            for op in reversed(ops):
                dt = op.backward(dt)
        if self.transform is not None:
            dt = self.transform.backward(dt)
        self.drop_in.backward(dt)


class GraphPrivacyModel(Model):
    """Prior-graph model: node features, gated propagation with attention,
    optional reshape layer and a weight-shared two-layer head."""

    def __init__(self, spec: ModelSpec, vocab: EntityVocabulary,
                 graph: PriorGraph, seed: int):
        if spec.kind not in ("gpa", "gip"):
            raise ConfigError(f"expected a graph model spec, got {spec.kind!r}")
        if graph.vocab_hash != vocab.hash():
            raise DataMismatchError("prior graph was built for a different vocabulary")
        self.spec = spec
        self.vocab = vocab
        self.store = ParameterStore()
        init_rng = stream(seed, STREAM_INIT)
        drop_rng = stream(seed, STREAM_DROPOUT)
        self.seed = seed

        masked = self._masked_graph(spec, graph, vocab)
        adjacency = split_directional(masked)
        attn_mask = masked.privacy_object_mask()
        k_o = vocab.n_objects
        s = spec.node_feature_dim
        o = spec.ggnn_output_channels

        n_scenes = len(vocab.scene_names)
        if spec.privacy_source == "scene_layer":
            self.scene_head = Linear(self.store, "s2p", n_scenes, 2, init_rng)
        elif spec.privacy_source == "deep_projection":
            self.scene_head = Linear(self.store, "align", n_scenes,
                                     spec.deep_dim, init_rng)
        else:
            self.scene_head = None

        self.grm = GRM(self.store, init_rng, s, o, k_o, adjacency, attn_mask,
                       steps=spec.ggnn_steps)
        readout = self.grm.readout_width
        self.reshape = (Linear(self.store, "reshape", readout, k_o + 1, init_rng)
                        if spec.reshape_layer else None)
        head_in = k_o + 1 if spec.reshape_layer else readout
        p = spec.dropout_p
        self.head_drop1 = Dropout(p, drop_rng, "head_dropout1")
        self.head_fc1 = Linear(self.store, "classifier.fc1", head_in,
                               spec.classifier_hidden, init_rng)
        self.head_relu = ReLU()
        self.head_drop2 = Dropout(p, drop_rng, "head_dropout2")
        self.head_fc2 = Linear(self.store, "classifier.fc2", spec.classifier_hidden,
                               1, init_rng)
        self.softmax = Softmax()

        if spec.s2p_mode == "pretrained" and self.scene_head is not None:
            prefix = "s2p" if spec.privacy_source == "scene_layer" else "align"
            self.store.freeze(prefix)

    @staticmethod
    def _masked_graph(spec: ModelSpec, graph: PriorGraph,
                      vocab: EntityVocabulary) -> PriorGraph:
        if spec.graph_mode == "zero":
            return zero_graph(vocab)
        if spec.graph_mode == "combined":
            return graph
        mode = {"bipartite": "gip-bipartite", "objects-binary": "gpa-objects"}[spec.graph_mode]
        return mask_and_binarise(graph, mode)

    # -- node feature assembly ------------------------------------------

    def _node_features(self, inputs: dict, idx: np.ndarray,
                       train: bool) -> np.ndarray:
        spec, vocab = self.spec, self.vocab
        k_o = vocab.n_objects
        batch = len(idx)
        x = np.zeros((batch, vocab.n_nodes, spec.node_feature_dim))

        if spec.feature_scheme == "cardinality":
            value_col = 1 if spec.node_type_flag else 0
            if spec.node_type_flag:
                x[:, k_o:, 0] = 1.0
            x[:, :k_o, value_col] = inputs["cardinality"][idx]
            if spec.privacy_source == "scene_layer":
                pair = self.scene_head.forward(inputs["scene_logits"][idx], train)
                x[:, k_o + 0, value_col] = pair[:, 0]
                x[:, k_o + 1, value_col] = pair[:, 1]
            elif spec.privacy_source == "random":
                pair = inputs["random_privacy"][idx]
                x[:, k_o + 0, value_col] = pair[:, 0]
                x[:, k_o + 1, value_col] = pair[:, 1]
            # zeros: nothing to fill in
        else:
            offset = 2 if spec.node_type_flag else 0
            if spec.node_type_flag:
                x[:, :k_o, 1] = 1.0
                x[:, k_o:, 0] = 1.0
            x[:, :k_o, offset:] = inputs["deep"][idx]
            if spec.privacy_source == "deep_projection":
                g = self.scene_head.forward(inputs["scene_logits"][idx], train)
                x[:, k_o:, offset:] = g[:, None, :]
            elif spec.privacy_source == "random":
                x[:, k_o:, offset:] = inputs["random_privacy"][idx][:, :, None]
        return x

    def _node_features_backward(self, dx: np.ndarray) -> None:
        spec = self.spec
        k_o = self.vocab.n_objects
        if self.scene_head is None:
            return
        if spec.feature_scheme == "cardinality":
            value_col = 1 if spec.node_type_flag else 0
            dpair = np.stack([dx[:, k_o + 0, value_col],
                              dx[:, k_o + 1, value_col]], axis=1)
            self.scene_head.backward(dpair)
        else:
            offset = 2 if spec.node_type_flag else 0
            self.scene_head.backward(dx[:, k_o:, offset:].sum(axis=1))

    # -- full pass --------------------------------------------------------

    def forward_probs(self, inputs, idx, train=False):
        x = self._node_features(inputs, np.asarray(idx), train)
        readout = self.grm.forward(x, train)
        logits = np.zeros((len(idx), 2))
        for j in range(2):
            t = readout[:, j]
            if self.reshape is not None:
                t = self.reshape.forward(t, train)
            t = self.head_drop1.forward(t, train)
            t = self.head_fc1.forward(t, train)
            t = self.head_relu.forward(t, train)
            t = self.head_drop2.forward(t, train)
            logits[:, j] = self.head_fc2.forward(t, train)[:, 0]
        return self.softmax.forward(logits, train)

    def backward(self, dprobs):
        dlogits = self.softmax.backward(dprobs)
        dreadout = np.zeros((dprobs.shape[0], 2, self.grm.readout_width))
        for j in reversed(range(2)):
            dt = self.head_fc2.backward(dlogits[:, j][:, None])
            dt = self.head_drop2.backward(dt)
            dt = self.head_relu.backward(dt)
            dt = self.head_fc1.backward(dt)
            dt = self.head_drop1.backward(dt)
            if self.reshape is not None:
                dt = self.reshape.backward(dt)
            dreadout[:, j] = dt
        dx = self.grm.backward(dreadout)
        self._node_features_backward(dx)


def build_model(spec: ModelSpec, vocab: EntityVocabulary, seed: int,
                graph: PriorGraph | None = None) -> Model:
    if spec.kind in ("s2p", "s2p_mlp1", "s2p_mlp2", "mlp", "mlp_i"):
        return FeedForwardModel(spec, vocab, seed)
    if spec.kind == "gamlp":
        return GraphAgnosticModel(spec, vocab, seed)
    if spec.kind in ("gpa", "gip"):
        if graph is None and spec.graph_mode != "zero":
            raise ConfigError(f"model kind {spec.kind!r} needs a prior graph")
        if graph is None:
            graph = zero_graph(vocab)
        return GraphPrivacyModel(spec, vocab, graph, seed)
    raise ConfigError(f"kind {spec.kind!r} is not a trainable model")
