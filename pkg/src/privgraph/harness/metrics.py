"""Confusion-count metrics: per-class P/R/F1, balanced accuracy, accuracy.

All rates derive from integer confusion counts. Accuracy is the share of
images whose predicted class matches the annotation; balanced accuracy is
the unweighted mean of the two per-class recalls and overall precision the
unweighted mean of the two per-class precisions. A class that is never
predicted has precision 0 by convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from ..feature_store import PRIVATE, PUBLIC

CLASS_NAMES = {PUBLIC: "public", PRIVATE: "private"}


@dataclass(frozen=True)
class ClassMetrics:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2.0 * p * r / (p + r) if p + r else 0.0


@dataclass(frozen=True)
class MetricsReport:
    per_class: dict[int, ClassMetrics]
    n_total: int
    counts_per_class: dict[int, int] = field(default_factory=dict)

    @property
    def accuracy(self) -> float:
        correct = sum(c.tp for c in self.per_class.values())
        return correct / self.n_total if self.n_total else 0.0

    @property
    def balanced_accuracy(self) -> float:
        return float(np.mean([c.recall for c in self.per_class.values()]))

    @property
    def overall_precision(self) -> float:
        return float(np.mean([c.precision for c in self.per_class.values()]))

    def as_percentages(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for label, c in self.per_class.items():
            name = CLASS_NAMES[label]
            out[f"precision_{name}"] = 100.0 * c.precision
            out[f"recall_{name}"] = 100.0 * c.recall
            out[f"f1_{name}"] = 100.0 * c.f1
        out["overall_precision"] = 100.0 * self.overall_precision
        out["balanced_accuracy"] = 100.0 * self.balanced_accuracy
        out["accuracy"] = 100.0 * self.accuracy
        return out

    def to_json(self) -> dict:
        return {
            "per_class": {str(k): {"tp": c.tp, "fp": c.fp, "fn": c.fn}
                          for k, c in self.per_class.items()},
            "n_total": self.n_total,
            "counts_per_class": {str(k): v for k, v in self.counts_per_class.items()},
            "percentages": {k: round(v, 10) for k, v in self.as_percentages().items()},
        }

    @staticmethod
    def from_json(raw: dict) -> "MetricsReport":
        per_class = {int(k): ClassMetrics(v["tp"], v["fp"], v["fn"])
                     for k, v in raw["per_class"].items()}
        return MetricsReport(per_class, raw["n_total"],
                             {int(k): v for k, v in raw["counts_per_class"].items()})

    def summary(self) -> str:
        p = self.as_percentages()
        return (f"R(priv) {p['recall_private']:.2f}  BA {p['balanced_accuracy']:.2f}  "
                f"ACC {p['accuracy']:.2f}")


def metrics_from_predictions(labels: np.ndarray, predictions: np.ndarray) -> MetricsReport:
    labels = np.asarray(labels, dtype=np.int64)
    predictions = np.asarray(predictions, dtype=np.int64)
    if labels.shape != predictions.shape:
        raise ValidationError(
            f"{labels.shape[0]} labels vs {predictions.shape[0]} predictions")
    if labels.size == 0:
        raise ValidationError("cannot evaluate an empty split")
    per_class = {}
    for y in (PUBLIC, PRIVATE):
        tp = int(np.sum((predictions == y) & (labels == y)))
        fp = int(np.sum((predictions == y) & (labels != y)))
        fn = int(np.sum((predictions != y) & (labels == y)))
        per_class[y] = ClassMetrics(tp, fp, fn)
    counts = {y: int(np.sum(labels == y)) for y in (PUBLIC, PRIVATE)}
    return MetricsReport(per_class, int(labels.size), counts)
