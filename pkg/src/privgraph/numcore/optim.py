"""Adam optimizer, the plateau learning-rate schedule and training config."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from .store import ParameterStore


@dataclass
class TrainConfig:
    lr0: float = 0.001
    lr_min: float = 1e-5
    patience: int = 10
    lr_factor: float = 0.5
    max_epochs: int = 1000
    batch_size: int = 100
    wall_clock_budget: float = 12 * 3600.0  # seconds
    seed: int = 789
    weight_decay: float = 0.0
    class_weights: tuple[float, float] | None = None
    dropout_p: float | None = None  # overrides the model's own setting

    def __post_init__(self):
        if not 0.0 < self.lr_factor < 1.0:
            raise ValidationError(f"lr_factor {self.lr_factor} outside (0, 1)")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")

    def to_json(self) -> dict:
        return {
            "lr0": self.lr0, "lr_min": self.lr_min, "patience": self.patience,
            "lr_factor": self.lr_factor, "max_epochs": self.max_epochs,
            "batch_size": self.batch_size,
            "wall_clock_budget": self.wall_clock_budget, "seed": self.seed,
            "weight_decay": self.weight_decay,
            "class_weights": list(self.class_weights) if self.class_weights else None,
            "dropout_p": self.dropout_p,
        }

    @staticmethod
    def from_json(raw: dict) -> "TrainConfig":
        raw = dict(raw)
        if raw.get("class_weights") is not None:
            raw["class_weights"] = tuple(raw["class_weights"])
        return TrainConfig(**raw)


class Adam:
    """Standard Adam with bias correction; one step updates every slot."""

    def __init__(self, store: ParameterStore, lr: float,
                 betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8,
                 weight_decay: float = 0.0):
        self.store = store
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay

    def step(self) -> None:
        self.store.step += 1
        t = self.store.step
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for _, p in self.store.items():
            if not p.trainable:
                continue
            g = p.grad
            if self.weight_decay:
                g = g + self.weight_decay * p.value
            p.adam_m[...] = self.beta1 * p.adam_m + (1.0 - self.beta1) * g
            p.adam_v[...] = self.beta2 * p.adam_v + (1.0 - self.beta2) * g * g
            m_hat = p.adam_m / bc1
            v_hat = p.adam_v / bc2
            p.value -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def adam_step(store: ParameterStore, lr: float,
              betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8,
              weight_decay: float = 0.0) -> None:
    Adam(store, lr, betas, eps, weight_decay).step()


class PlateauScheduler:
    """Halve the learning rate when the monitored value stops improving.

    The monitor is a to-be-maximized quantity (validation balanced
    accuracy). After more than ``patience`` consecutive epochs without a
    new best, the rate is multiplied by ``factor``; once it drops below
    ``lr_min`` the schedule signals a stop.
    """

    def __init__(self, lr0: float, factor: float = 0.5, patience: int = 10,
                 lr_min: float = 1e-5):
        self.lr = lr0
        self.factor = factor
        self.patience = patience
        self.lr_min = lr_min
        self.best: float | None = None
        self.bad_epochs = 0
        self.stopped = False

    def step(self, monitored: float) -> str:
        """Feed one epoch's monitored value; returns 'ok', 'reduced' or 'stop'."""
        if self.best is None or monitored > self.best:
            self.best = monitored
            self.bad_epochs = 0
            return "ok"
        self.bad_epochs += 1
        if self.bad_epochs > self.patience:
            self.lr *= self.factor
            self.bad_epochs = 0
            if self.lr < self.lr_min:
                self.stopped = True
                return "stop"
            return "reduced"
        return "ok"
