"""Gated graph propagation with an attention readout over privacy nodes.

One weight-tied propagation unit is applied for a fixed number of steps
(three by default). Per step the node states are
aggregated along outgoing and incoming edges separately, the two
aggregates are concatenated, and update/reset gating folds them into the
state. An output layer reads ``[final state, initial features]`` per node.

The readout computes, for every (privacy node j, object node i) pair, a
coefficient ``sigmoid(a(tanh(W_i h_i) * tanh(W_j h_j)))`` from the final
hidden states, forced to zero where the prior graph has no edge between i
and j. Each privacy node then emits the concatenation of its own output
features with all object output features scaled by its coefficients; the
result has width (1 + n_objects) * output_dim.
"""

from __future__ import annotations

import numpy as np

from ..numcore.layers import Linear, check_finite
from ..numcore.store import ParameterStore
from ..prior_graph import DirectionalAdjacency


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class GRM:
    N_PRIVACY = 2

    def __init__(self, store: ParameterStore, rng: np.random.Generator,
                 state_dim: int, output_dim: int, n_objects: int,
                 adjacency: DirectionalAdjacency, attention_mask: np.ndarray,
                 steps: int = 3, name: str = "grm"):
        s, o = state_dim, output_dim
        self.state_dim = s
        self.output_dim = o
        self.n_objects = n_objects
        self.steps = steps
        self.a_out = adjacency.outgoing
        self.a_in = adjacency.incoming
        self.attention_mask = attention_mask.astype(np.float64)  # (2, n_objects)

        self.gate_update_agg = Linear(store, f"{name}.gate_update_agg", 2 * s, s, rng)
        self.gate_update_state = Linear(store, f"{name}.gate_update_state", s, s, rng)
        self.gate_reset_agg = Linear(store, f"{name}.gate_reset_agg", 2 * s, s, rng)
        self.gate_reset_state = Linear(store, f"{name}.gate_reset_state", s, s, rng)
        self.gate_cand_agg = Linear(store, f"{name}.gate_cand_agg", 2 * s, s, rng)
        self.gate_cand_state = Linear(store, f"{name}.gate_cand_state", s, s, rng)
        self.output = Linear(store, f"{name}.output", 2 * s, o, rng)
        self.attn_objects = Linear(store, f"{name}.attn_objects", s, o, rng)
        self.attn_privacy = Linear(store, f"{name}.attn_privacy", s, o, rng)
        self.attn_score = Linear(store, f"{name}.attn_score", o, 1, rng)

        self._cache: dict | None = None

    @property
    def readout_width(self) -> int:
        return (1 + self.n_objects) * self.output_dim

    def propagate(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        """Run the gated steps only; returns the final hidden states."""
        h = x
        step_caches = []
        for _ in range(self.steps):
            agg = np.concatenate([self.a_out @ h, self.a_in @ h], axis=-1)
            z = _sigmoid(self.gate_update_agg.forward(agg, train)
                         + self.gate_update_state.forward(h, train))
            r = _sigmoid(self.gate_reset_agg.forward(agg, train)
                         + self.gate_reset_state.forward(h, train))
            cand = np.tanh(self.gate_cand_agg.forward(agg, train)
                           + self.gate_cand_state.forward(r * h, train))
            h_next = (1.0 - z) * h + z * cand
            step_caches.append((h, z, r, cand))
            h = h_next
        check_finite("grm.propagate", h)
        self._steps_cache = step_caches
        return h

    def propagate_backward(self, dh: np.ndarray) -> np.ndarray:
        for h_prev, z, r, cand in reversed(self._steps_cache):
            dz = dh * (cand - h_prev)
            dcand = dh * z
            dh_prev = dh * (1.0 - z)

            dq_cand = dcand * (1.0 - cand * cand)
            dagg = self.gate_cand_agg.backward(dq_cand)
            drh = self.gate_cand_state.backward(dq_cand)
            dr = drh * h_prev
            dh_prev += drh * r

            dq_reset = dr * r * (1.0 - r)
            dagg += self.gate_reset_agg.backward(dq_reset)
            dh_prev += self.gate_reset_state.backward(dq_reset)

            dq_update = dz * z * (1.0 - z)
            dagg += self.gate_update_agg.backward(dq_update)
            dh_prev += self.gate_update_state.backward(dq_update)

            s = self.state_dim
            dh_prev += self.a_out.T @ dagg[..., :s] + self.a_in.T @ dagg[..., s:]
            dh = dh_prev
        return dh

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        """Map node features (B, K, s) to the per-privacy-node readout (B, 2, H)."""
        batch, k_nodes, _ = x.shape
        k_o, o = self.n_objects, self.output_dim
        h = self.propagate(x, train)

        refined = np.tanh(self.output.forward(np.concatenate([h, x], axis=-1), train))
        obj_proj = np.tanh(self.attn_objects.forward(h[:, :k_o], train))

        alphas, scores, priv_projs = [], [], []
        readout = np.zeros((batch, self.N_PRIVACY, self.readout_width))
        for j in range(self.N_PRIVACY):
            priv_proj = np.tanh(self.attn_privacy.forward(h[:, k_o + j], train))
            score = _sigmoid(
                self.attn_score.forward(obj_proj * priv_proj[:, None, :], train)[..., 0])
            alpha = score * self.attention_mask[j]
            readout[:, j, :o] = refined[:, k_o + j]
            readout[:, j, o:] = (alpha[..., None] * refined[:, :k_o]).reshape(batch, -1)
            alphas.append(alpha)
            scores.append(score)
            priv_projs.append(priv_proj)

        self._cache = {"x": x, "h": h, "refined": refined, "obj_proj": obj_proj,
                       "alphas": alphas, "scores": scores, "priv_projs": priv_projs}
        return check_finite("grm.readout", readout)

    def attention_coefficients(self, x: np.ndarray) -> np.ndarray:
        """(B, 2, n_objects) coefficients for inspection; zero where unconnected."""
        self.forward(x, train=False)
        return np.stack(self._cache["alphas"], axis=1)

    def backward(self, dreadout: np.ndarray) -> np.ndarray:
        cache = self._cache
        x, h, refined = cache["x"], cache["h"], cache["refined"]
        obj_proj = cache["obj_proj"]
        batch = x.shape[0]
        k_o, o, s = self.n_objects, self.output_dim, self.state_dim

        drefined = np.zeros_like(refined)
        dh = np.zeros_like(h)
        dobj_proj = np.zeros_like(obj_proj)
        for j in reversed(range(self.N_PRIVACY)):
            dout_j = dreadout[:, j]
            drefined[:, k_o + j] += dout_j[:, :o]
            rest = dout_j[:, o:].reshape(batch, k_o, o)
            alpha, score, priv_proj = (cache["alphas"][j], cache["scores"][j],
                                       cache["priv_projs"][j])
            dalpha = (rest * refined[:, :k_o]).sum(axis=-1)
            drefined[:, :k_o] += rest * alpha[..., None]
            dscore = dalpha * self.attention_mask[j] * score * (1.0 - score)
            dfused = self.attn_score.backward(dscore[..., None])
            dobj_proj += dfused * priv_proj[:, None, :]
            dpriv_proj = (dfused * obj_proj).sum(axis=1)
            dh[:, k_o + j] += self.attn_privacy.backward(
                dpriv_proj * (1.0 - priv_proj * priv_proj))
        dh[:, :k_o] += self.attn_objects.backward(dobj_proj * (1.0 - obj_proj * obj_proj))

        dcat = self.output.backward(drefined * (1.0 - refined * refined))
        dh += dcat[..., :s]
        dx = dcat[..., s:].copy()
        dx += self.propagate_backward(dh)
        return dx
