"""Command-line entry point tying the library into reproducible pipelines.

Every artifact-producing command writes a manifest (resolved config, seed,
input hashes, package version) next to its outputs. Validation problems
exit with status 1 and a single-line diagnostic; unexpected runtime
failures exit with status 2.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__
from .errors import PrivGraphError
from .feature_store import (Dataset, load_dataset, load_split, load_vocabulary,
                            save_split, share_with_at_most,
                            stratified_kfold_split)
from .hashing import sha256_file
from .harness import (baseline_predict_all, evaluate, grid_sweep,
                      load_checkpoint, metrics_from_predictions, multi_run,
                      reports, save_checkpoint, train)
from .models import (ModelSpec, count_parameters, get_preset,
                     spec_from_config_text, spec_to_config_text)
from .models.spec import PRESETS
from .numcore import TrainConfig
from .prior_graph import build_combined_graph, load_graph, save_graph


def _out_root() -> Path:
    return Path(os.environ.get("PRIVGRAPH_OUT", "."))


def _resolve_out_dir(args) -> Path:
    out = Path(args.out_dir) if args.out_dir else _out_root() / "runs" / args.command
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_data(args) -> Dataset:
    vocab = load_vocabulary(args.vocab)
    dataset = load_dataset(args.data, vocab)
    if getattr(args, "split", None):
        dataset = dataset.with_splits(load_split(args.split))
    elif getattr(args, "need_splits", False) and not any(
            r.split for r in dataset.records):
        raise PrivGraphError(
            "records carry no split assignment; pass --split or run "
            "'privgraph split' first")
    return dataset


def _resolve_spec(args) -> tuple[str, ModelSpec]:
    overrides = dict(kv.split("=", 1) for kv in (getattr(args, "set", None) or []))
    if args.preset and args.config:
        raise PrivGraphError("pass either --preset or --config, not both")
    if args.preset:
        spec = get_preset(args.preset)
        if overrides:
            spec = spec_from_config_text(spec_to_config_text(spec), overrides)
        return args.preset, spec
    if args.config:
        with open(args.config, encoding="utf-8") as f:
            return Path(args.config).stem, spec_from_config_text(f.read(), overrides)
    raise PrivGraphError("one of --preset or --config is required")


def _train_config(args, spec_seed_default: int = 789) -> TrainConfig:
    kwargs = {}
    if args.seed is not None:
        kwargs["seed"] = args.seed
    if getattr(args, "budget", None) is not None:
        kwargs["wall_clock_budget"] = args.budget
    if getattr(args, "max_epochs", None) is not None:
        kwargs["max_epochs"] = args.max_epochs
    if getattr(args, "batch_size", None) is not None:
        kwargs["batch_size"] = args.batch_size
    return TrainConfig(**kwargs)


def _write_manifest(out_dir: Path, args, extra: dict | None = None) -> None:
    manifest = {
        "command": args.command,
        "version": __version__,
        "written_at_unix": time.time(),
        "inputs": {name: sha256_file(path)
                   for name, path in (("data", getattr(args, "data", None)),
                                      ("vocab", getattr(args, "vocab", None)),
                                      ("graph", getattr(args, "graph", None)),
                                      ("split", getattr(args, "split", None)))
                   if path},
        "args": {k: v for k, v in vars(args).items() if k != "func"},
    }
    manifest.update(extra or {})
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=1, sort_keys=True, default=str)


# -- commands ---------------------------------------------------------------


def cmd_split(args) -> int:
    dataset = _load_data(args)
    assignment = stratified_kfold_split(dataset, args.folds, args.seed or 789,
                                        args.fold_index)
    out_dir = _resolve_out_dir(args)
    out = out_dir / "split.csv"
    save_split(assignment, str(out))
    _write_manifest(out_dir, args)
    print(f"wrote {out} ({args.folds} folds, fold {args.fold_index} as test)")
    return 0


def cmd_build_graph(args) -> int:
    args.need_splits = True
    dataset = _load_data(args)
    train_records = dataset.subset("train")
    graph = build_combined_graph(train_records, dataset.vocabulary)
    out_dir = _resolve_out_dir(args)
    out = out_dir / "graph.json"
    save_graph(graph, str(out))
    _write_manifest(out_dir, args, {"graph_provenance": graph.provenance})
    print(f"wrote {out} from {len(train_records)} training records")
    return 0


def cmd_train(args) -> int:
    args.need_splits = True
    dataset = _load_data(args)
    name, spec = _resolve_spec(args)
    graph = (load_graph(args.graph, dataset.vocabulary.hash())
             if args.graph else None)
    config = _train_config(args)
    out_dir = _resolve_out_dir(args)

    if args.runs and args.runs > 1:
        seeds = [config.seed + i for i in range(args.runs)]
        out = multi_run(spec, dataset, config, seeds, graph)
        with open(out_dir / "multi_run.json", "w", encoding="utf-8") as f:
            json.dump({"seeds": out["seeds"], "per_run": out["per_run"],
                       "stats": out["stats"]}, f, indent=1, sort_keys=True)
        _write_manifest(out_dir, args, {"preset": name})
        for key, stat in sorted(out["stats"].items()):
            print(f"{key}: {stat['mean']:.2f} +- {stat['std']:.2f}")
        return 0

    record, checkpoint, _ = train(spec, dataset, config, graph)
    save_checkpoint(checkpoint, str(out_dir / "checkpoint.json"))
    reports.write_history_json(record, str(out_dir / "history.json"))
    reports.write_runs_csv([reports.run_csv_row(name, spec, record)],
                           str(out_dir / "run.csv"))
    _write_manifest(out_dir, args, {
        "preset": name, "wall_clock_seconds": record.wall_clock_seconds,
        "stop_reason": record.stop_reason, "best_epoch": record.best_epoch})
    test = record.final_reports.get("test")
    print(f"best epoch {record.best_epoch} "
          f"(val BA {100 * record.best_val_balanced_accuracy:.2f})"
          + (f"; test: {test.summary()}" if test else ""))
    return 0


def cmd_eval(args) -> int:
    dataset = _load_data(args)
    records = dataset.subset(args.split_name) if any(
        r.split for r in dataset.records) else dataset.records
    if args.baseline:
        if not records:
            raise PrivGraphError(f"split {args.split_name!r} is empty")
        preds = baseline_predict_all(args.baseline, records, dataset.vocabulary,
                                     args.seed or 789)
        labels = [r.label for r in records]
        report = metrics_from_predictions(labels, preds)
    elif args.checkpoint:
        graph = (load_graph(args.graph, dataset.vocabulary.hash())
                 if args.graph else None)
        report = evaluate(load_checkpoint(args.checkpoint), dataset,
                          args.split_name, graph)
    else:
        raise PrivGraphError("one of --checkpoint or --baseline is required")
    for key, value in report.as_percentages().items():
        print(f"{key}: {value:.2f}")
    return 0


def cmd_sweep(args) -> int:
    args.need_splits = True
    dataset = _load_data(args)
    name, spec = _resolve_spec(args)
    graph = (load_graph(args.graph, dataset.vocabulary.hash())
             if args.graph else None)
    axes = {}
    for axis in args.axis or []:
        key, _, values = axis.partition("=")
        if not values:
            raise PrivGraphError(f"bad --axis {axis!r}; expected name=v1,v2,...")
        parsed = []
        for v in values.split(","):
            try:
                parsed.append(int(v))
            except ValueError:
                parsed.append(v)
        axes[key] = parsed
    if not axes:
        raise PrivGraphError("sweep needs at least one --axis")
    cells = grid_sweep(spec, dataset, _train_config(args), axes, graph)
    out_dir = _resolve_out_dir(args)
    reports.write_sweep_csv(cells, str(out_dir / "sweep.csv"))
    _write_manifest(out_dir, args, {"preset": name, "cells": len(cells)})
    print(f"wrote {out_dir / 'sweep.csv'} ({len(cells)} cells)")
    return 0


def cmd_count_params(args) -> int:
    name, spec = _resolve_spec(args)
    report = count_parameters(spec)
    print(f"{name}:")
    for line in report.lines():
        print(f"  {line}")
    return 0


def cmd_stats(args) -> int:
    dataset = _load_data(args)
    out_dir = _resolve_out_dir(args)
    out = out_dir / "histogram.csv"
    splits = [s for s in ("train", "val", "test") if dataset.subset(s)]
    if not splits:
        raise PrivGraphError("records carry no split assignment; pass --split")
    reports.write_histogram_csv(dataset, str(out), splits)
    _write_manifest(out_dir, args)
    for split in splits:
        share = share_with_at_most(dataset, split, 1)
        print(f"{split}: {share:.1f}% of images show at most one object category")
    print(f"wrote {out}")
    return 0


def cmd_report(args) -> int:
    entries = []
    for run_dir in sorted(Path(args.runs_dir).iterdir()):
        history = run_dir / "history.json"
        checkpoint = run_dir / "checkpoint.json"
        manifest = run_dir / "manifest.json"
        if not history.exists() or not checkpoint.exists():
            continue
        with open(history, encoding="utf-8") as f:
            hist = json.load(f)
        with open(checkpoint, encoding="utf-8") as f:
            spec = ModelSpec.from_json(json.load(f)["model_spec"])
        name = run_dir.name
        if manifest.exists():
            with open(manifest, encoding="utf-8") as f:
                name = json.load(f).get("preset", name)
        from .harness.metrics import MetricsReport
        entries.append((name, spec, MetricsReport.from_json(hist["final"]["test"])))
    if not entries:
        raise PrivGraphError(f"no completed runs under {args.runs_dir}")
    out_dir = _resolve_out_dir(args)
    reports.write_comparison_csv(entries, str(out_dir / "comparison.csv"))
    reports.write_scatter_csv(entries, str(out_dir / "scatter.csv"))
    print(f"wrote {out_dir / 'comparison.csv'} and scatter.csv "
          f"({len(entries)} methods)")
    return 0


# -- argument wiring ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="privgraph",
        description="Train and audit image-privacy classifiers over "
                    "pre-extracted visual-entity features.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, data=True, spec=False, trainish=False):
        if data:
            p.add_argument("--data", required=True, help="feature file (JSON Lines)")
            p.add_argument("--vocab", required=True, help="vocabulary JSON")
            p.add_argument("--split", help="split CSV overriding record splits")
        if spec:
            p.add_argument("--preset", choices=sorted(PRESETS),
                           help="named model preset")
            p.add_argument("--config", help="model config file (key = value)")
            p.add_argument("--set", action="append", metavar="KEY=VALUE",
                           help="override one spec field")
        if trainish:
            p.add_argument("--graph", help="prior graph JSON")
            p.add_argument("--seed", type=int, default=None)
            p.add_argument("--out-dir")
            p.add_argument("--budget", type=float,
                           help="wall-clock budget in seconds")
            p.add_argument("--max-epochs", type=int)
            p.add_argument("--batch-size", type=int)

    p = sub.add_parser("split", help="stratified k-fold split export")
    add_common(p)
    p.add_argument("--folds", type=int, default=3)
    p.add_argument("--fold-index", type=int, default=0)
    p.add_argument("--seed", type=int, default=789)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("build-graph", help="build the combined prior graph")
    add_common(p)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("train", help="train one model (or several seeds)")
    add_common(p, spec=True, trainish=True)
    p.add_argument("--runs", type=int, default=1,
                   help="number of seeds for mean/std statistics")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint or rule baseline")
    add_common(p)
    p.add_argument("--checkpoint")
    p.add_argument("--baseline",
                   choices=["all_public", "all_private", "random", "pcs2", "pcs3"])
    p.add_argument("--graph")
    p.add_argument("--split-name", default="test",
                   choices=["train", "val", "test"])
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="grid sweep over spec fields")
    add_common(p, spec=True, trainish=True)
    p.add_argument("--axis", action="append", metavar="FIELD=V1,V2,...")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("count-params", help="parameter accounting for a spec")
    add_common(p, data=False, spec=True)
    p.set_defaults(func=cmd_count_params)

    p = sub.add_parser("stats", help="object-count histograms per split")
    add_common(p)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("report", help="comparative table from finished runs")
    p.add_argument("--runs-dir", required=True)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PrivGraphError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001 - last-resort diagnostic
        print(f"unexpected failure: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
