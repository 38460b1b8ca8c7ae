import numpy as np
import pytest

from privgraph.errors import ValidationError
from privgraph.feature_store import PRIVATE, PUBLIC, Dataset
from privgraph.harness import (MetricsReport, baseline_predict,
                               baseline_predict_all, class_weights_from_labels,
                               make_synthetic_dataset, metrics_from_predictions)
from privgraph.harness.metrics import ClassMetrics

from conftest import make_record


def oracle_metrics(labels, preds):
    """Scalar re-computation of every rate from first principles."""
    out = {}
    for y in (0, 1):
        tp = sum(1 for l, p in zip(labels, preds) if p == y and l == y)
        fp = sum(1 for l, p in zip(labels, preds) if p == y and l != y)
        fn = sum(1 for l, p in zip(labels, preds) if p != y and l == y)
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        out[y] = (tp, fp, fn, prec, rec, f1)
    correct = sum(1 for l, p in zip(labels, preds) if l == p)
    out["acc"] = correct / len(labels)
    out["ba"] = (out[0][4] + out[1][4]) / 2
    out["op"] = (out[0][3] + out[1][3]) / 2
    return out


class TestMetrics:
    def test_matches_oracle_on_random_configurations(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            n = int(rng.integers(1, 40))
            labels = rng.integers(0, 2, size=n)
            preds = rng.integers(0, 2, size=n)
            report = metrics_from_predictions(labels, preds)
            ref = oracle_metrics(labels.tolist(), preds.tolist())
            for y in (0, 1):
                c = report.per_class[y]
                assert (c.tp, c.fp, c.fn) == ref[y][:3]
                assert abs(c.precision - ref[y][3]) < 1e-12
                assert abs(c.recall - ref[y][4]) < 1e-12
                assert abs(c.f1 - ref[y][5]) < 1e-12
            assert abs(report.accuracy - ref["acc"]) < 1e-12
            assert abs(report.balanced_accuracy - ref["ba"]) < 1e-12
            assert abs(report.overall_precision - ref["op"]) < 1e-12

    def test_constant_predictor_ba_exactly_half(self):
        rng = np.random.default_rng(1)
        labels = rng.integers(0, 2, size=257)
        for constant in (0, 1):
            report = metrics_from_predictions(labels, np.full(257, constant))
            assert report.balanced_accuracy == 0.5

    def test_all_public_on_privacyalert_shaped_split(self):
        labels = np.array([1] * 450 + [0] * 1346)
        report = metrics_from_predictions(labels, np.zeros_like(labels))
        pct = report.as_percentages()
        assert pct["balanced_accuracy"] == 50.0
        assert abs(pct["accuracy"] - 74.94) < 0.1
        assert pct["recall_private"] == 0.0

    def test_perfect_predictor(self):
        labels = np.array([0, 1, 1, 0])
        report = metrics_from_predictions(labels, labels.copy())
        pct = report.as_percentages()
        assert all(pct[k] == 100.0 for k in pct)

    def test_accuracy_is_correct_over_total(self):
        # with every image predicted, the per-class counts collapse to
        # correct / total rather than double-counting each error
        labels = np.array([0, 0, 1, 1, 1])
        preds = np.array([0, 1, 1, 0, 1])
        report = metrics_from_predictions(labels, preds)
        assert report.accuracy == 3 / 5
        tp = sum(c.tp for c in report.per_class.values())
        fpfn = sum(c.fp + c.fn for c in report.per_class.values())
        assert tp == 3 and fpfn == 2 * 2  # each error counted as one FP and one FN

    def test_json_round_trip(self):
        labels = np.array([0, 1, 1])
        report = metrics_from_predictions(labels, np.array([0, 0, 1]))
        back = MetricsReport.from_json(report.to_json())
        assert back.as_percentages() == report.as_percentages()

    def test_empty_split_rejected(self):
        with pytest.raises(ValidationError):
            metrics_from_predictions(np.array([]), np.array([]))

    def test_never_predicted_class_has_zero_precision(self):
        report = metrics_from_predictions(np.array([0, 1]), np.array([0, 0]))
        assert report.per_class[PRIVATE].precision == 0.0


class TestBaselines:
    def test_rule_application(self, tiny_vocab):
        three_people = make_record("a", 0, [0, 0, 0])
        assert baseline_predict("pcs2", three_people, tiny_vocab) == PRIVATE
        assert baseline_predict("pcs3", three_people, tiny_vocab) == PUBLIC
        two_people = make_record("b", 0, [0, 0, 1])
        assert baseline_predict("pcs3", two_people, tiny_vocab) == PRIVATE
        no_person = make_record("c", 0, [1, 2])
        assert baseline_predict("pcs2", no_person, tiny_vocab) == PUBLIC
        assert baseline_predict("pcs3", no_person, tiny_vocab) == PUBLIC

    def test_constant_rules(self, tiny_vocab):
        rec = make_record("a", 0, [0])
        assert baseline_predict("all_private", rec, tiny_vocab) == PRIVATE
        assert baseline_predict("all_public", rec, tiny_vocab) == PUBLIC

    def test_random_baseline_balanced(self, tiny_vocab):
        records = tuple(make_record(f"r{i}", i % 2, []) for i in range(10000))
        ds = Dataset(tiny_vocab, records)
        preds = baseline_predict_all("random", ds.records, tiny_vocab, seed=789)
        report = metrics_from_predictions(ds.labels(), preds)
        assert abs(report.balanced_accuracy - 0.5) < 0.02

    def test_random_baseline_deterministic(self, tiny_vocab):
        records = tuple(make_record(f"r{i}", 0, []) for i in range(50))
        a = baseline_predict_all("random", records, tiny_vocab, seed=3)
        b = baseline_predict_all("random", records, tiny_vocab, seed=3)
        np.testing.assert_array_equal(a, b)


class TestClassWeights:
    def test_inverse_frequency(self):
        labels = np.array([0] * 30 + [1] * 10)
        w = class_weights_from_labels(labels)
        assert w == (40 / 60, 40 / 20)


class TestSyntheticGenerator:
    def test_shapes_and_splits(self):
        ds = make_synthetic_dataset(60, 20, 20, seed=1)
        assert len(ds) == 100
        assert len(ds.subset("train")) == 60
        assert len(ds.subset("val")) == 20
        assert len(ds.subset("test")) == 20
        rec = ds.records[0]
        assert rec.scene_logits.shape == (365,)

    def test_deterministic(self):
        a = make_synthetic_dataset(30, 10, 10, seed=4)
        b = make_synthetic_dataset(30, 10, 10, seed=4)
        assert [r.label for r in a.records] == [r.label for r in b.records]
        np.testing.assert_array_equal(a.records[5].scene_logits,
                                      b.records[5].scene_logits)

    def test_planted_rule_visible_in_cardinality(self):
        ds = make_synthetic_dataset(400, 0, 0, seed=2, noise=0.0)
        hits = 0
        for rec in ds.subset("train"):
            count0 = sum(1 for d in rec.detections if d.category == 0)
            if (count0 >= 2) == (rec.label == 1):
                hits += 1
        assert hits / 400 > 0.9

    def test_scene_only_mode_has_no_cardinality_signal(self):
        ds = make_synthetic_dataset(600, 0, 0, seed=3, rule="scene_only", noise=0.0)
        counts = {0: [], 1: []}
        for rec in ds.subset("train"):
            counts[rec.label].append(
                sum(1 for d in rec.detections if d.category == 0))
        # class-conditional means agree: the count carries no label information
        assert abs(np.mean(counts[0]) - np.mean(counts[1])) < 0.15

    def test_label_noise_rate(self):
        noisy = make_synthetic_dataset(2000, 0, 0, seed=5, noise=0.3)
        clean = make_synthetic_dataset(2000, 0, 0, seed=5, noise=0.0)
        flips = sum(1 for a, b in zip(noisy.records, clean.records)
                    if a.label != b.label)
        assert abs(flips / 2000 - 0.3) < 0.03

    def test_imbalanced_fraction(self):
        ds = make_synthetic_dataset(1000, 0, 0, seed=6, private_fraction=0.25,
                                    noise=0.0)
        frac = np.mean([r.label for r in ds.records])
        assert abs(frac - 0.25) < 0.04

    def test_optional_payloads(self):
        ds = make_synthetic_dataset(5, 0, 0, seed=7, with_deep=True, deep_dim=6,
                                    with_pixels=True, pixel_dim=24)
        rec = next(r for r in ds.records if r.detections)
        assert rec.deep_object_features[rec.detections[0].category].shape == (6,)
        assert rec.pixel_vector.shape == (24,)
