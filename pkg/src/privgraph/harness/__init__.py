from .metrics import ClassMetrics, MetricsReport, metrics_from_predictions
from .baselines import baseline_predict, baseline_predict_all
from .synth import make_degeneration_dataset, make_synthetic_dataset
from .train import (RunRecord, class_weights_from_labels, config_hash, evaluate,
                    load_checkpoint, model_from_checkpoint, save_checkpoint, train)
from .sweep import grid_sweep, multi_run
from . import reports

__all__ = [
    "ClassMetrics", "MetricsReport", "metrics_from_predictions",
    "baseline_predict", "baseline_predict_all", "make_synthetic_dataset",
    "make_degeneration_dataset",
    "RunRecord", "train", "evaluate", "save_checkpoint", "load_checkpoint",
    "model_from_checkpoint", "config_hash", "class_weights_from_labels",
    "grid_sweep", "multi_run", "reports",
]
