"""Layer primitives with hand-written forward and backward passes.

Each layer keeps a stack of forward caches, so a weight-tied layer may run
several times per step (the gated propagation unit does) as long as
``backward`` calls happen in exact reverse order of the ``forward`` calls.
Inputs may be ``(batch, features)`` or ``(batch, nodes, features)``.

Every forward output is checked for NaN/Inf and fails fast with the layer
name attached.
"""

from __future__ import annotations

import numpy as np

from ..errors import NumericError, ValidationError
from .initializers import xavier_uniform_init, zeros_init
from .store import ParameterStore


def check_finite(name: str, arr: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"non-finite values produced by {name}")
    return arr


class Layer:
    name = "layer"

    def __init__(self):
        self._cache: list = []

    def _push(self, item) -> None:
        self._cache.append(item)

    def _pop(self):
        if not self._cache:
            raise ValidationError(f"{self.name}: backward called without a matching forward")
        return self._cache.pop()


class Linear(Layer):
    """Affine map on the last axis: y = x W + b."""

    def __init__(self, store: ParameterStore, name: str, d_in: int, d_out: int,
                 rng: np.random.Generator, bias: bool = True):
        super().__init__()
        self.name = name
        self.w = store.add(f"{name}.w", xavier_uniform_init((d_in, d_out), rng))
        self.b = store.add(f"{name}.b", zeros_init((d_out,))) if bias else None

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        y = x @ self.w.value
        if self.b is not None:
            y = y + self.b.value
        self._push(x)
        return check_finite(self.name, y)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        x = self._pop()
        d_in, d_out = self.w.value.shape
        x2 = x.reshape(-1, d_in)
        dy2 = dy.reshape(-1, d_out)
        self.w.grad += x2.T @ dy2
        if self.b is not None:
            self.b.grad += dy2.sum(axis=0)
        return (dy2 @ self.w.value.T).reshape(x.shape)


class ReLU(Layer):
    name = "relu"

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        mask = x > 0
        self._push(mask)
        return x * mask

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return dy * self._pop()


class Tanh(Layer):
    name = "tanh"

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        y = np.tanh(x)
        self._push(y)
        return y

    def backward(self, dy: np.ndarray) -> np.ndarray:
        y = self._pop()
        return dy * (1.0 - y * y)


class Sigmoid(Layer):
    name = "sigmoid"

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        y = np.empty_like(x)
        pos = x >= 0
        y[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        y[~pos] = ex / (1.0 + ex)
        self._push(y)
        return y

    def backward(self, dy: np.ndarray) -> np.ndarray:
        y = self._pop()
        return dy * y * (1.0 - y)


class Softmax(Layer):
    """Row-wise softmax over the last axis."""

    name = "softmax"

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        shifted = x - x.max(axis=-1, keepdims=True)
        e = np.exp(shifted)
        y = e / e.sum(axis=-1, keepdims=True)
        self._push(y)
        return check_finite(self.name, y)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        y = self._pop()
        return y * (dy - (dy * y).sum(axis=-1, keepdims=True))


class Dropout(Layer):
    """Inverted dropout: scales kept units by 1/(1-p) at train time so that
    evaluation is the plain identity."""

    def __init__(self, p: float, rng: np.random.Generator, name: str = "dropout"):
        super().__init__()
        if not 0.0 <= p < 1.0:
            raise ValidationError(f"dropout probability {p} outside [0, 1)")
        self.p = p
        self.rng = rng
        self.name = name

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if not train or self.p == 0.0:
            self._push(None)
            return x
        keep = (self.rng.random(x.shape) >= self.p) / (1.0 - self.p)
        self._push(keep)
        return x * keep

    def backward(self, dy: np.ndarray) -> np.ndarray:
        keep = self._pop()
        return dy if keep is None else dy * keep


class BatchNormNodes(Layer):
    """Normalize each node position over the batch (and per-node feature axis).

    Input is ``(batch, nodes)`` or ``(batch, nodes, features)``; statistics
    are taken over every axis except the node axis, and each node position
    owns one scale and one shift parameter. Running statistics (momentum
    0.1, unbiased variance) make evaluation deterministic.
    """

    def __init__(self, store: ParameterStore, name: str, n_nodes: int,
                 eps: float = 1e-5, momentum: float = 0.1):
        super().__init__()
        self.name = name
        self.eps = eps
        self.momentum = momentum
        self.gamma = store.add(f"{name}.gamma", np.ones(n_nodes))
        self.beta = store.add(f"{name}.beta", zeros_init((n_nodes,)))
        self.running_mean = np.zeros(n_nodes)
        self.running_var = np.ones(n_nodes)

    @staticmethod
    def _axes_and_shape(x: np.ndarray) -> tuple[tuple[int, ...], tuple[int, ...]]:
        if x.ndim == 2:
            return (0,), (1, x.shape[1])
        if x.ndim == 3:
            return (0, 2), (1, x.shape[1], 1)
        raise ValidationError(f"batchnorm expects 2-d or 3-d input, got {x.ndim}-d")

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        axes, pshape = self._axes_and_shape(x)
        gamma = self.gamma.value.reshape(pshape)
        beta = self.beta.value.reshape(pshape)
        if train:
            m = x.size // x.shape[1]
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            if m > 1:
                self.running_mean += self.momentum * (mean - self.running_mean)
                self.running_var += self.momentum * (var * m / (m - 1) - self.running_var)
            inv = 1.0 / np.sqrt(var + self.eps)
            xhat = (x - mean.reshape(pshape)) * inv.reshape(pshape)
            self._push(("train", xhat, inv, m))
        else:
            inv = 1.0 / np.sqrt(self.running_var + self.eps)
            xhat = (x - self.running_mean.reshape(pshape)) * inv.reshape(pshape)
            self._push(("eval", xhat, inv, None))
        return check_finite(self.name, gamma * xhat + beta)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        mode, xhat, inv, m = self._pop()
        axes, pshape = self._axes_and_shape(dy)
        gamma = self.gamma.value.reshape(pshape)
        self.beta.grad += dy.sum(axis=axes)
        self.gamma.grad += (dy * xhat).sum(axis=axes)
        dxhat = dy * gamma
        if mode == "eval":
            return dxhat * inv.reshape(pshape)
        term = dxhat - dxhat.mean(axis=axes).reshape(pshape) \
            - xhat * (dxhat * xhat).mean(axis=axes).reshape(pshape)
        return term * inv.reshape(pshape)
