"""CSV/JSON emission for runs, sweeps, comparisons and dataset statistics.

Percentages are rendered at two decimals; the underlying JSON artifacts
keep full precision.
"""

from __future__ import annotations

import csv
import json
from typing import Sequence

from ..feature_store import PRIVATE, PUBLIC, Dataset, cooccurrence_histogram, histogram_percentages
from ..models.counts import count_parameters
from ..models.spec import ModelSpec
from .metrics import MetricsReport
from .train import RunRecord

METRIC_COLUMNS = ["precision_private", "recall_private", "f1_private",
                  "precision_public", "recall_public", "f1_public",
                  "overall_precision", "balanced_accuracy", "accuracy"]


def run_csv_row(name: str, spec: ModelSpec, record: RunRecord,
                split: str = "test") -> dict:
    report = record.final_reports[split]
    counts = count_parameters(spec)
    row = {"method": name, "config_hash": record.config_hash, "seed": record.seed,
           "split": split}
    row.update({k: f"{v:.2f}" for k, v in report.as_percentages().items()})
    row["params_optimised"] = counts.total_optimised
    return row


def write_runs_csv(rows: Sequence[dict], path: str) -> None:
    if not rows:
        raise ValueError("no rows to write")
    fields = list(rows[0].keys())
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)


def write_history_json(record: RunRecord, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(record.to_json(), f, sort_keys=True)


def write_sweep_csv(cells: Sequence[dict], path: str, split: str = "test") -> None:
    axis_names = list(cells[0]["axes"].keys())
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(axis_names + METRIC_COLUMNS)
        for cell in cells:
            report = cell["record"].final_reports[split]
            pct = report.as_percentages()
            writer.writerow([cell["axes"][n] for n in axis_names]
                            + [f"{pct[k]:.2f}" for k in METRIC_COLUMNS])


def write_comparison_csv(entries: Sequence[tuple[str, ModelSpec, MetricsReport]],
                         path: str) -> None:
    """One row per method: per-class P/R/F1, overall P/BA/ACC, parameters."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["method"] + METRIC_COLUMNS + ["params_optimised"])
        for name, spec, report in entries:
            pct = report.as_percentages()
            writer.writerow([name] + [f"{pct[k]:.2f}" for k in METRIC_COLUMNS]
                            + [count_parameters(spec).total_optimised])


def write_scatter_csv(entries: Sequence[tuple[str, ModelSpec, MetricsReport]],
                      path: str) -> None:
    """Plot data relating recall, balanced accuracy and parameter count."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["label", "rec-priv", "ba", "size"])
        for name, spec, report in entries:
            pct = report.as_percentages()
            writer.writerow([name, f"{pct['recall_private']:.2f}",
                             f"{pct['balanced_accuracy']:.2f}",
                             count_parameters(spec).total_optimised])


def write_histogram_csv(dataset: Dataset, path: str,
                        splits: Sequence[str] = ("train", "val", "test")) -> None:
    """Distinct-category histogram per split: counts plus per-bin class shares."""
    tables = {}
    for split in splits:
        if dataset.subset(split):
            hist = cooccurrence_histogram(dataset, split)
            tables[split] = (hist, histogram_percentages(hist))
    max_bin = max((max(h) for h, _ in tables.values() if h), default=0)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        header = ["n-objs"]
        for split in tables:
            header += [f"{split}-priv", f"{split}-publ",
                       f"{split}-priv-pct", f"{split}-publ-pct"]
        writer.writerow(header)
        for n in range(max_bin + 1):
            row: list = [n]
            for split, (hist, pct) in tables.items():
                counts = hist.get(n, {PUBLIC: 0, PRIVATE: 0})
                shares = pct.get(n, {PUBLIC: 0.0, PRIVATE: 0.0})
                row += [counts[PRIVATE], counts[PUBLIC],
                        f"{shares[PRIVATE]:.2f}", f"{shares[PUBLIC]:.2f}"]
            writer.writerow(row)
