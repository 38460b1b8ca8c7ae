"""Parameter initializers. All weights are Xavier-uniform, all biases zero."""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError


def xavier_uniform_init(shape: tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    """Uniform samples in +-sqrt(6 / (fan_in + fan_out))."""
    if len(shape) != 2 or shape[0] <= 0 or shape[1] <= 0:
        raise ValidationError(f"xavier init needs a positive 2-d shape, got {shape}")
    fan_in, fan_out = shape
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def zeros_init(shape: tuple[int, ...]) -> np.ndarray:
    return np.zeros(shape, dtype=np.float64)
