"""Train the compact classifiers and compare them against rule baselines.

Uses the desk-scale synthetic corpus so everything finishes in about a
minute; the same calls drive full-size extracted feature files.
"""

from privgraph.harness import (baseline_predict_all, make_synthetic_dataset,
                               metrics_from_predictions, train)
from privgraph.models import count_parameters, get_preset
from privgraph.numcore import TrainConfig
from privgraph.prior_graph import build_combined_graph

dataset = make_synthetic_dataset(600, 200, 200, seed=789, noise=0.05)
graph = build_combined_graph(dataset.subset("train"), dataset.vocabulary)
config = TrainConfig(max_epochs=120, seed=789, wall_clock_budget=300.0)

rows = []
for preset in ("s2p", "mlp", "gamlp-nobn", "gpa"):
    record, checkpoint, _ = train(get_preset(preset), dataset, config, graph)
    report = record.final_reports["test"]
    rows.append((preset, report, count_parameters(get_preset(preset)).total_optimised))
    print(f"trained {preset}: best epoch {record.best_epoch}, "
          f"stopped by {record.stop_reason} after {len(record.history)} epochs")

test_records = dataset.subset("test")
labels = [r.label for r in test_records]
for rule in ("all_public", "pcs2", "pcs3", "random"):
    preds = baseline_predict_all(rule, test_records, dataset.vocabulary, seed=789)
    rows.append((rule, metrics_from_predictions(labels, preds), 0))

print(f"\n{'method':12s} {'R(priv)':>8s} {'BA':>7s} {'ACC':>7s} {'params':>9s}")
for name, report, params in rows:
    pct = report.as_percentages()
    print(f"{name:12s} {pct['recall_private']:8.2f} {pct['balanced_accuracy']:7.2f} "
          f"{pct['accuracy']:7.2f} {params:9,d}")
