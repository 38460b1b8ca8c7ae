"""Verification of analytic gradients against central finite differences."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .store import ParameterStore


@dataclass
class GradCheckReport:
    tolerance: float
    per_slot: dict[str, float] = field(default_factory=dict)
    input_error: float | None = None

    @property
    def max_error(self) -> float:
        errors = list(self.per_slot.values())
        if self.input_error is not None:
            errors.append(self.input_error)
        return max(errors) if errors else 0.0

    @property
    def passed(self) -> bool:
        return self.max_error < self.tolerance

    def failures(self) -> dict[str, float]:
        return {k: v for k, v in self.per_slot.items() if v >= self.tolerance}


def _rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
    return float(np.max(np.abs(analytic - numeric) / scale)) if analytic.size else 0.0


def gradcheck(loss_fn: Callable[[], float], backward_fn: Callable[[], None],
              store: ParameterStore, tolerance: float = 1e-4,
              h: float = 1e-5, max_entries_per_slot: int | None = None,
              rng: np.random.Generator | None = None) -> GradCheckReport:
    """Compare analytic parameter gradients with central differences.

    ``loss_fn`` evaluates the scalar loss at the store's current values in
    a deterministic way (dropout disabled); ``backward_fn`` runs one
    forward/backward and leaves gradients accumulated in the store.
    Failures are recorded in the report rather than raised.
    """
    store.zero_grad()
    backward_fn()
    analytic = {name: p.grad.copy() for name, p in store.items()}

    report = GradCheckReport(tolerance=tolerance)
    for name, p in store.items():
        flat = p.value.reshape(-1)
        n = flat.size
        if max_entries_per_slot is not None and n > max_entries_per_slot:
            picker = rng or np.random.default_rng(0)
            idx = picker.choice(n, size=max_entries_per_slot, replace=False)
        else:
            idx = np.arange(n)
        numeric = np.zeros(len(idx))
        for j, i in enumerate(idx):
            orig = flat[i]
            flat[i] = orig + h
            up = loss_fn()
            flat[i] = orig - h
            down = loss_fn()
            flat[i] = orig
            numeric[j] = (up - down) / (2.0 * h)
        report.per_slot[name] = _rel_error(analytic[name].reshape(-1)[idx], numeric)
    return report


def gradcheck_input(loss_fn: Callable[[np.ndarray], float],
                    backward_to_input_fn: Callable[[np.ndarray], np.ndarray],
                    x: np.ndarray, tolerance: float = 1e-4,
                    h: float = 1e-5) -> GradCheckReport:
    """Same check for the gradient with respect to a layer input."""
    analytic = backward_to_input_fn(x)
    numeric = np.zeros_like(x).reshape(-1)
    flat = x.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        up = loss_fn(x)
        flat[i] = orig - h
        down = loss_fn(x)
        flat[i] = orig
        numeric[i] = (up - down) / (2.0 * h)
    report = GradCheckReport(tolerance=tolerance)
    report.input_error = _rel_error(analytic.reshape(-1), numeric)
    return report
