"""Training loop with the plateau schedule and best-checkpoint selection.

One run: Adam over shuffled batches, after every epoch the validation
balanced accuracy drives the learning-rate schedule, and the parameters
of the epoch with the highest validation balanced accuracy are the ones
evaluated and saved. Training stops at the epoch cap, when the learning
rate falls below its floor, or when the wall-clock budget runs out
(a clean stop, not an error).

Wall-clock time is reported on the run record but deliberately kept out
of the serialized history and checkpoint so those artifacts are
bit-identical across same-seed runs.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DataMismatchError, ValidationError
from ..feature_store import Dataset, NormalizationStats
from ..hashing import hash_of
from ..models.inputs import fit_stats_for_spec, prepare_inputs
from ..models.nets import Model, build_model, predict_labels
from ..models.spec import ModelSpec
from ..numcore.loss import cross_entropy_loss
from ..numcore.optim import Adam, PlateauScheduler, TrainConfig
from ..prior_graph import PriorGraph
from ..rng import STREAM_SHUFFLE, stream
from .metrics import MetricsReport, metrics_from_predictions

CHECKPOINT_FORMAT = "privgraph-checkpoint/1"


@dataclass
class EpochStats:
    loss: float
    val_balanced_accuracy: float
    lr: float


@dataclass
class RunRecord:
    config_hash: str
    seed: int
    history: list[EpochStats] = field(default_factory=list)
    best_epoch: int = 0
    best_val_balanced_accuracy: float = 0.0
    stop_reason: str = ""
    wall_clock_seconds: float = 0.0
    final_reports: dict[str, MetricsReport] = field(default_factory=dict)

    def to_json(self, include_wall_clock: bool = False) -> dict:
        out = {
            "config_hash": self.config_hash,
            "seed": self.seed,
            "history": [{"loss": e.loss, "val_ba": e.val_balanced_accuracy,
                         "lr": e.lr} for e in self.history],
            "best_epoch": self.best_epoch,
            "best_val_ba": self.best_val_balanced_accuracy,
            "stop_reason": self.stop_reason,
            "final": {split: rep.to_json() for split, rep in self.final_reports.items()},
        }
        if include_wall_clock:
            out["wall_clock_seconds"] = self.wall_clock_seconds
        return out


def config_hash(spec: ModelSpec, config: TrainConfig) -> str:
    return hash_of({"model": spec.to_json(), "train": config.to_json()})


def class_weights_from_labels(labels: np.ndarray) -> tuple[float, float]:
    """Inverse class frequency, n / (2 * n_y), from the training labels."""
    n = labels.size
    counts = [max(int(np.sum(labels == y)), 1) for y in (0, 1)]
    return (n / (2.0 * counts[0]), n / (2.0 * counts[1]))


def _eval_predictions(model: Model, inputs: dict, batch_size: int) -> np.ndarray:
    n = len(inputs["labels"])
    preds = np.empty(n, dtype=np.int64)
    for start in range(0, n, batch_size):
        idx = np.arange(start, min(start + batch_size, n))
        preds[idx] = predict_labels(model.forward_probs(inputs, idx, train=False))
    return preds


def train(spec: ModelSpec, dataset: Dataset, config: TrainConfig,
          graph: PriorGraph | None = None,
          pretrained_scene_head: dict[str, np.ndarray] | None = None,
          ) -> tuple[RunRecord, dict, Model]:
    """Train one model; returns (run record, checkpoint dict, fitted model)."""
    if spec.kind == "baseline":
        raise ConfigError("rule baselines are not trained; use evaluate_baseline")
    started = time.monotonic()
    vocab = dataset.vocabulary
    splits = {name: dataset.subset(name) for name in ("train", "val", "test")}
    if not splits["train"] or not splits["val"]:
        raise ValidationError("training needs non-empty train and val splits")

    stats = fit_stats_for_spec(spec, splits["train"], vocab)

    if spec.s2p_mode == "pretrained" and pretrained_scene_head is None:
        if spec.privacy_source != "scene_layer":
            raise ConfigError("pretraining is defined for the scene-to-privacy layer only")
        head_spec = ModelSpec(kind="s2p")
        _, head_ckpt, _ = train(head_spec, dataset, config)
        slots = head_ckpt["store"]["slots"]
        pretrained_scene_head = {
            "s2p.w": np.asarray(slots["head.fc0.w"]["value"]).reshape(
                tuple(slots["head.fc0.w"]["shape"])),
            "s2p.b": np.asarray(slots["head.fc0.b"]["value"]).reshape(
                tuple(slots["head.fc0.b"]["shape"])),
        }

    model = build_model(spec, vocab, config.seed, graph)
    if pretrained_scene_head is not None:
        for name, value in pretrained_scene_head.items():
            if name not in model.store:
                raise DataMismatchError(f"no slot {name!r} to receive pretrained weights")
            model.store[name].value[...] = value

    inputs = {name: prepare_inputs(recs, vocab, spec, stats, config.seed)
              for name, recs in splits.items() if recs}
    train_labels = inputs["train"]["labels"]

    weights = config.class_weights
    if weights is None and spec.weighted_loss:
        weights = class_weights_from_labels(train_labels)

    scheduler = PlateauScheduler(config.lr0, config.lr_factor, config.patience,
                                 config.lr_min)
    optimizer = Adam(model.store, scheduler.lr, weight_decay=config.weight_decay)
    shuffle_rng = stream(config.seed, STREAM_SHUFFLE)

    record = RunRecord(config_hash=config_hash(spec, config), seed=config.seed)
    best_snapshot = None
    n_train = len(train_labels)

    for epoch in range(1, config.max_epochs + 1):
        order = shuffle_rng.permutation(n_train)
        total_loss = 0.0
        for start in range(0, n_train, config.batch_size):
            idx = order[start:start + config.batch_size]
            probs = model.forward_probs(inputs["train"], idx, train=True)
            loss, dprobs = cross_entropy_loss(probs, train_labels[idx], weights)
            model.store.zero_grad()
            model.backward(dprobs)
            optimizer.lr = scheduler.lr
            optimizer.step()
            total_loss += loss * len(idx)

        val_preds = _eval_predictions(model, inputs["val"], config.batch_size)
        val_ba = metrics_from_predictions(inputs["val"]["labels"], val_preds).balanced_accuracy
        record.history.append(EpochStats(total_loss / n_train, val_ba, scheduler.lr))

        if best_snapshot is None or val_ba > record.best_val_balanced_accuracy:
            record.best_val_balanced_accuracy = val_ba
            record.best_epoch = epoch
            best_snapshot = model.store.snapshot()

        action = scheduler.step(val_ba)
        if action == "stop":
            record.stop_reason = "lr_floor"
            break
        if time.monotonic() - started > config.wall_clock_budget:
            record.stop_reason = "budget"
            break
    else:
        record.stop_reason = "max_epochs"

    model.store.restore(best_snapshot)
    for split, split_inputs in inputs.items():
        preds = _eval_predictions(model, split_inputs, config.batch_size)
        record.final_reports[split] = metrics_from_predictions(
            split_inputs["labels"], preds)
    record.wall_clock_seconds = time.monotonic() - started

    checkpoint = {
        "format": CHECKPOINT_FORMAT,
        "config_hash": record.config_hash,
        "model_spec": spec.to_json(),
        "train_config": config.to_json(),
        "normalization": stats.to_json() if stats is not None else None,
        "best_epoch": record.best_epoch,
        "store": model.store.state_dict(),
    }
    return record, checkpoint, model


def save_checkpoint(checkpoint: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(checkpoint, f, sort_keys=True)


def load_checkpoint(path: str) -> dict:
    with open(path, encoding="utf-8") as f:
        ckpt = json.load(f)
    if ckpt.get("format") != CHECKPOINT_FORMAT:
        raise DataMismatchError(f"not a checkpoint file (format {ckpt.get('format')!r})")
    return ckpt


def model_from_checkpoint(checkpoint: dict, dataset: Dataset,
                          graph: PriorGraph | None = None
                          ) -> tuple[Model, ModelSpec, NormalizationStats | None]:
    spec = ModelSpec.from_json(checkpoint["model_spec"])
    seed = int(checkpoint["train_config"]["seed"])
    model = build_model(spec, dataset.vocabulary, seed, graph)
    model.store.load_state_dict(checkpoint["store"])
    stats = (NormalizationStats.from_json(checkpoint["normalization"])
             if checkpoint.get("normalization") else None)
    return model, spec, stats


def evaluate(checkpoint: dict, dataset: Dataset, split: str = "test",
             graph: PriorGraph | None = None, batch_size: int = 100) -> MetricsReport:
    """Exact confusion counts of a saved model on one split."""
    records = dataset.subset(split)
    if not records:
        raise ValidationError(f"split {split!r} is empty")
    model, spec, stats = model_from_checkpoint(checkpoint, dataset, graph)
    seed = int(checkpoint["train_config"]["seed"])
    inputs = prepare_inputs(records, dataset.vocabulary, spec, stats, seed)
    preds = _eval_predictions(model, inputs, batch_size)
    return metrics_from_predictions(inputs["labels"], preds)
