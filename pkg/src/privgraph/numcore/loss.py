"""Two-class cross-entropy on softmax probabilities."""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError

PROB_FLOOR = 1e-12


def cross_entropy_loss(probabilities: np.ndarray, labels: np.ndarray,
                       class_weights: tuple[float, float] | None = None
                       ) -> tuple[float, np.ndarray]:
    """Mean negative log-probability of the annotated class.

    ``probabilities`` is ``(batch, 2)`` with rows summing to 1 (softmax
    output). The optional class weights scale each sample's term by the
    weight of its annotated class. Returns the scalar loss and its
    gradient with respect to the probabilities.
    """
    probs = np.asarray(probabilities, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if probs.ndim != 2 or probs.shape[0] != labels.shape[0]:
        raise ValidationError(
            f"probabilities {probs.shape} do not match {labels.shape[0]} labels")
    batch = probs.shape[0]
    rows = np.arange(batch)
    target = np.maximum(probs[rows, labels], PROB_FLOOR)

    weights = np.ones(batch)
    if class_weights is not None:
        weights = np.asarray(class_weights, dtype=np.float64)[labels]

    loss = float((weights * -np.log(target)).sum() / batch)
    grad = np.zeros_like(probs)
    grad[rows, labels] = -weights / (batch * target)
    return loss, grad
