"""Multi-seed statistics and grid sweeps over architecture axes."""

from __future__ import annotations

from dataclasses import replace
from itertools import product
from typing import Sequence

import numpy as np

from ..errors import ValidationError
from ..feature_store import Dataset
from ..models.spec import ModelSpec
from ..numcore.optim import TrainConfig
from ..prior_graph import PriorGraph
from .train import RunRecord, train


def multi_run(spec: ModelSpec, dataset: Dataset, config: TrainConfig,
              seeds: Sequence[int], graph: PriorGraph | None = None,
              split: str = "test") -> dict:
    """Mean and sample standard deviation of every metric across seeds."""
    if len(seeds) < 2:
        raise ValidationError("multi-run statistics need at least two runs")
    records: list[RunRecord] = []
    for seed in seeds:
        record, _, _ = train(spec, dataset, replace(config, seed=seed), graph)
        records.append(record)
    metric_rows = [r.final_reports[split].as_percentages() for r in records]
    keys = metric_rows[0].keys()
    stats = {key: {"mean": float(np.mean([m[key] for m in metric_rows])),
                   "std": float(np.std([m[key] for m in metric_rows], ddof=1))}
             for key in keys}
    return {"seeds": list(seeds), "per_run": metric_rows, "stats": stats,
            "records": records}


def grid_sweep(base_spec: ModelSpec, dataset: Dataset, config: TrainConfig,
               axes: dict[str, Sequence], graph: PriorGraph | None = None
               ) -> list[dict]:
    """One training run per combination of the given spec-field values."""
    if not axes or any(len(v) == 0 for v in axes.values()):
        raise ValidationError("sweep axes must be non-empty")
    names = list(axes)
    cells = []
    for combo in product(*(axes[n] for n in names)):
        cell_spec = replace(base_spec, **dict(zip(names, combo)))
        record, _, _ = train(cell_spec, dataset, config, graph)
        cells.append({"axes": dict(zip(names, combo)), "spec": cell_spec,
                      "record": record})
    return cells
