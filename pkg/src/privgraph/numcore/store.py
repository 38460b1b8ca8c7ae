"""Flat storage for trainable parameters, their gradients and Adam state."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError


@dataclass
class Param:
    value: np.ndarray
    grad: np.ndarray
    adam_m: np.ndarray
    adam_v: np.ndarray
    trainable: bool = True

    @property
    def size(self) -> int:
        return self.value.size


class ParameterStore:
    """Named parameter slots owned by exactly one training loop.

    Slot names are hierarchical (``"grm.gate_z_w.w"``) so per-component
    parameter counts fall out of prefix sums.
    """

    def __init__(self):
        self._slots: dict[str, Param] = {}
        self.step: int = 0  # Adam step counter, shared by all slots

    def add(self, name: str, value: np.ndarray, trainable: bool = True) -> Param:
        if name in self._slots:
            raise ValidationError(f"duplicate parameter slot {name!r}")
        value = np.asarray(value, dtype=np.float64)
        param = Param(value, np.zeros_like(value), np.zeros_like(value),
                      np.zeros_like(value), trainable)
        self._slots[name] = param
        return param

    def __getitem__(self, name: str) -> Param:
        return self._slots[name]

    def __contains__(self, name: str) -> bool:
        return name in self._slots

    def names(self) -> list[str]:
        return list(self._slots)

    def items(self):
        return self._slots.items()

    def zero_grad(self) -> None:
        for p in self._slots.values():
            p.grad[...] = 0.0

    def total_size(self, prefix: str = "", trainable_only: bool = False) -> int:
        return sum(p.size for name, p in self._slots.items()
                   if name.startswith(prefix) and (p.trainable or not trainable_only))

    def component_sizes(self) -> dict[str, int]:
        """Parameter count per top-level name component."""
        out: dict[str, int] = {}
        for name, p in self._slots.items():
            top = name.split(".", 1)[0]
            out[top] = out.get(top, 0) + p.size
        return out

    def freeze(self, prefix: str) -> None:
        for name, p in self._slots.items():
            if name.startswith(prefix):
                p.trainable = False

    def state_dict(self) -> dict:
        return {
            "step": self.step,
            "slots": {
                name: {
                    "shape": list(p.value.shape),
                    "value": p.value.reshape(-1).tolist(),
                    "adam_m": p.adam_m.reshape(-1).tolist(),
                    "adam_v": p.adam_v.reshape(-1).tolist(),
                    "trainable": p.trainable,
                }
                for name, p in self._slots.items()
            },
        }

    def load_state_dict(self, state: dict) -> None:
        slots = state["slots"]
        if set(slots) != set(self._slots):
            missing = set(self._slots) - set(slots)
            extra = set(slots) - set(self._slots)
            raise ValidationError(
                f"checkpoint slots do not match model (missing {sorted(missing)}, "
                f"unexpected {sorted(extra)})")
        for name, entry in slots.items():
            p = self._slots[name]
            shape = tuple(entry["shape"])
            if shape != p.value.shape:
                raise ValidationError(
                    f"slot {name!r}: checkpoint shape {shape} != model {p.value.shape}")
            p.value[...] = np.asarray(entry["value"], dtype=np.float64).reshape(shape)
            p.adam_m[...] = np.asarray(entry["adam_m"], dtype=np.float64).reshape(shape)
            p.adam_v[...] = np.asarray(entry["adam_v"], dtype=np.float64).reshape(shape)
            p.trainable = bool(entry["trainable"])
        self.step = int(state["step"])

    def snapshot(self) -> dict:
        """Cheap in-memory copy of values and optimizer state."""
        return {"step": self.step,
                "values": {n: p.value.copy() for n, p in self._slots.items()},
                "adam_m": {n: p.adam_m.copy() for n, p in self._slots.items()},
                "adam_v": {n: p.adam_v.copy() for n, p in self._slots.items()}}

    def restore(self, snap: dict) -> None:
        for name, value in snap["values"].items():
            self._slots[name].value[...] = value
            self._slots[name].adam_m[...] = snap["adam_m"][name]
            self._slots[name].adam_v[...] = snap["adam_v"][name]
        self.step = snap["step"]
