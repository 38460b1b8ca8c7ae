import numpy as np
import pytest

from privgraph.errors import ConfigError, DataMismatchError
from privgraph.feature_store import Dataset, default_vocabulary
from privgraph.models import (ModelSpec, build_model, count_parameters,
                              fit_stats_for_spec, get_preset,
                              grm_parameter_count,
                              init_node_features_cardinality,
                              init_node_features_deep, prepare_inputs,
                              random_privacy_pair, spec_from_config_text,
                              spec_to_config_text)
from privgraph.numcore import cross_entropy_loss, gradcheck
from privgraph.prior_graph import build_combined_graph, zero_graph

from conftest import make_record, random_toy_dataset


class TestNodeFeaturesCardinality:
    def test_layout_with_flag(self, tiny_vocab):
        rec = make_record("a", 1, [0, 0])
        x = init_node_features_cardinality(rec, tiny_vocab, np.array([0.3, -0.2]))
        assert x.shape == (7, 2)
        np.testing.assert_array_equal(x[0], [0.0, 2.0])
        np.testing.assert_array_equal(x[1], [0.0, 0.0])
        np.testing.assert_allclose(x[5], [1.0, 0.3])
        np.testing.assert_allclose(x[6], [1.0, -0.2])

    def test_layout_without_flag(self, tiny_vocab):
        rec = make_record("a", 1, [0, 0])
        x = init_node_features_cardinality(rec, tiny_vocab, np.array([0.3, -0.2]),
                                           node_type_flag=False)
        assert x.shape == (7, 1)
        assert x[0, 0] == 2.0 and x[5, 0] == 0.3 and x[6, 0] == -0.2

    def test_random_pair_is_per_image_and_seeded(self):
        a1 = random_privacy_pair("img-1", seed=789)
        a2 = random_privacy_pair("img-1", seed=789)
        b = random_privacy_pair("img-2", seed=789)
        c = random_privacy_pair("img-1", seed=790)
        np.testing.assert_array_equal(a1, a2)
        assert not np.array_equal(a1, b) and not np.array_equal(a1, c)
        assert np.all((a1 >= 0) & (a1 < 1))


class TestNodeFeaturesDeep:
    def test_no_detections_all_zero_rows(self, tiny_vocab):
        rec = make_record("a", 0, [])
        x = init_node_features_deep(rec, tiny_vocab, np.zeros(4), deep_dim=4)
        for v in range(5):
            np.testing.assert_array_equal(x[v], [0, 1, 0, 0, 0, 0])

    def test_detected_category_carries_map_vector(self, tiny_vocab):
        # the per-category map already holds the last instance's features
        vec = np.array([1.0, 2.0, 3.0, 4.0])
        rec = make_record("a", 0, [0, 0], deep={0: vec})
        x = init_node_features_deep(rec, tiny_vocab, np.zeros(4), deep_dim=4)
        np.testing.assert_array_equal(x[0], [0, 1, 1, 2, 3, 4])

    def test_privacy_rows_share_vector(self, tiny_vocab):
        g = np.array([0.5, -0.5, 0.1, 0.2])
        rec = make_record("a", 0, [])
        x = init_node_features_deep(rec, tiny_vocab, g, deep_dim=4)
        np.testing.assert_array_equal(x[5], [1, 0, 0.5, -0.5, 0.1, 0.2])
        np.testing.assert_array_equal(x[6], x[5])

    def test_zeros_source_rows(self, tiny_vocab):
        rec = make_record("a", 0, [])
        x = init_node_features_deep(rec, tiny_vocab, np.zeros(4), deep_dim=4)
        np.testing.assert_array_equal(x[5], [1, 0, 0, 0, 0, 0])

    def test_missing_deep_features_rejected(self, tiny_vocab):
        rec = make_record("a", 0, [1])
        with pytest.raises(DataMismatchError):
            init_node_features_deep(rec, tiny_vocab, np.zeros(4), deep_dim=4)


class TestParameterCounts:
    @pytest.mark.parametrize("preset,total", [
        ("s2p", 732), ("s2p-mlp1", 66978), ("s2p-mlp2", 83449),
        ("mlp", 1906), ("mlp-i", 99104258), ("gamlp", 1250), ("gamlp-nobn", 758),
        ("gpa", 14175), ("gpa-no-flag", 14134), ("gpa-no-reshape", 1093),
        ("gpa-zeros", 361), ("gpa-random", 361),
    ])
    def test_published_totals(self, preset, total):
        assert count_parameters(get_preset(preset)).total_optimised == total

    def test_component_breakdown(self):
        gpa = count_parameters(get_preset("gpa"))
        assert gpa.components == {"grm": 73, "reshape": 13203,
                                  "classifier": 167, "s2p": 732}
        mlp = count_parameters(get_preset("mlp"))
        assert mlp.components["layers"] == 1906
        gamlp = count_parameters(get_preset("gamlp"))
        assert gamlp.components == {"blocks": 576, "batchnorm": 492, "head": 182}

    def test_mlp_first_layer(self):
        # 82 inputs x 16 hidden + bias
        assert 82 * 16 + 16 == 1328

    def test_grm_closed_form(self):
        assert sum(grm_parameter_count(2, 2).values()) == 73
        assert sum(grm_parameter_count(1, 2).values()) == 32
        assert sum(grm_parameter_count(4098, 512).values()) == 159561777

    def test_gip_reference_scale(self):
        report = count_parameters(get_preset("gip"))
        assert report.components["grm"] == 159561777
        assert report.components["classifier"] == 169877505

    @pytest.mark.parametrize("preset", [
        "s2p", "s2p-mlp1", "s2p-mlp2", "mlp", "gamlp", "gamlp-nobn",
        "gpa", "gpa-original", "gpa-bipartite", "gpa-no-flag",
        "gpa-no-reshape", "gpa-zeros", "gpa-random", "gpa-ablated", "gip-desk",
    ])
    def test_closed_form_equals_store_enumeration(self, preset):
        spec = get_preset(preset)
        vocab = default_vocabulary()
        graph = zero_graph(vocab)
        model = build_model(spec, vocab, seed=1, graph=graph)
        report = count_parameters(spec)
        assert report.total_optimised == model.store.total_size()
        # per-component prefix sums must agree with the slot layout
        sizes = model.store.component_sizes()
        for component, count in report.components.items():
            matched = {"grm": "grm", "reshape": "reshape", "classifier": "classifier",
                       "s2p": "s2p", "align": "align", "layers": "layers",
                       "blocks": "blocks", "batchnorm": "batchnorm", "head": "head",
                       "transform": "transform"}[component]
            assert sizes[matched] == count, (component, sizes)

    def test_mlp_i_small_scale_store(self):
        spec = ModelSpec(kind="mlp_i", pixel_dim=192)
        vocab = default_vocabulary()
        model = build_model(spec, vocab, seed=0)
        assert count_parameters(spec).total_optimised == model.store.total_size()

    @pytest.mark.parametrize("kw", [
        {"use_confidence": True},
        {"input_transform": True},
        {"use_confidence": True, "input_transform": True, "use_batchnorm": True},
    ])
    def test_gamlp_variant_counts(self, kw):
        spec = ModelSpec(kind="gamlp", **kw)
        vocab = default_vocabulary()
        model = build_model(spec, vocab, seed=0)
        assert count_parameters(spec).total_optimised == model.store.total_size()

    def test_mlp_confidence_variant_count(self):
        spec = ModelSpec(kind="mlp", use_confidence=True)
        vocab = default_vocabulary()
        model = build_model(spec, vocab, seed=0)
        report = count_parameters(spec)
        assert report.total_optimised == model.store.total_size()
        assert report.components["layers"] == (164 * 16 + 16) + 2 * 272 + 34


class TestSpecSerialization:
    def test_round_trip(self):
        spec = get_preset("gpa-no-flag")
        text = spec_to_config_text(spec)
        assert spec_from_config_text(text) == spec

    def test_unknown_key_is_hard_error(self):
        with pytest.raises(ConfigError, match="unknown key"):
            spec_from_config_text("kind = mlp\nbogus = 3\n")

    def test_overrides(self):
        spec = spec_from_config_text("kind = mlp\n", {"mlp_width": "32"})
        assert spec.mlp_width == 32
        with pytest.raises(ConfigError):
            spec_from_config_text("kind = mlp\n", {"nope": "1"})

    def test_invalid_combinations(self):
        with pytest.raises(ConfigError):
            ModelSpec(kind="gpa", privacy_source="zeros", s2p_mode="joint")
        with pytest.raises(ConfigError):
            ModelSpec(kind="nope")


def nudge_parameters(model, seed=99, scale=0.01):
    """Move every parameter off exact zero so no ReLU sits at its kink,
    where finite differences and the subgradient legitimately disagree."""
    rng = np.random.default_rng(seed)
    for name in model.store.names():
        p = model.store[name]
        p.value += rng.normal(scale=scale, size=p.value.shape)


def build_toy_setup(tiny_vocab, spec, n=20, seed=3, with_deep=False):
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        label = int(rng.random() < 0.5)
        cats = [c for c in range(tiny_vocab.n_objects) if rng.random() < 0.4]
        deep = {c: rng.normal(size=spec.deep_dim) for c in cats} if with_deep else None
        records.append(make_record(
            f"t{i}", label, cats, scene=rng.normal(size=8), deep=deep,
            split="train"))
    ds = Dataset(tiny_vocab, tuple(records))
    graph = build_combined_graph(ds.records, tiny_vocab)
    return ds, graph


class TestFeedForwardModels:
    def test_s2p_zero_weights_uniform(self, tiny_vocab):
        spec = ModelSpec(kind="s2p")
        model = build_model(spec, tiny_vocab, seed=0)
        for name in model.store.names():
            model.store[name].value[...] = 0.0
        inputs = {"x": np.random.default_rng(0).normal(size=(4, 8)),
                  "labels": np.zeros(4, dtype=np.int64)}
        probs = model.forward_probs(inputs, np.arange(4))
        np.testing.assert_allclose(probs, 0.5)

    def test_probabilities_sum_to_one(self, tiny_vocab):
        for preset in ("s2p", "mlp", "gamlp"):
            spec = get_preset(preset)
            model = build_model(spec, tiny_vocab, seed=5)
            ds, _ = build_toy_setup(tiny_vocab, spec)
            stats = fit_stats_for_spec(spec, ds.records, tiny_vocab)
            inputs = prepare_inputs(ds.records, tiny_vocab, spec, stats)
            probs = model.forward_probs(inputs, np.arange(len(ds)))
            np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)

    def test_forward_deterministic(self, tiny_vocab):
        spec = get_preset("mlp")
        ds, _ = build_toy_setup(tiny_vocab, spec)
        stats = fit_stats_for_spec(spec, ds.records, tiny_vocab)
        inputs = prepare_inputs(ds.records, tiny_vocab, spec, stats)
        p1 = build_model(spec, tiny_vocab, 7).forward_probs(inputs, np.arange(5))
        p2 = build_model(spec, tiny_vocab, 7).forward_probs(inputs, np.arange(5))
        np.testing.assert_array_equal(p1, p2)

    def test_missing_required_field(self, tiny_vocab):
        spec = ModelSpec(kind="s2p")
        records = (make_record("a", 0, []),)
        with pytest.raises(DataMismatchError, match="scene_logits"):
            prepare_inputs(records, tiny_vocab, spec)


class TestGraphAgnostic:
    def test_zero_features_zero_bias_gives_head_bias(self, tiny_vocab):
        spec = get_preset("gamlp-nobn")
        model = build_model(spec, tiny_vocab, seed=2)
        inputs = {"nodes": np.zeros((3, 7, 1)), "labels": np.zeros(3, np.int64)}
        probs = model.forward_probs(inputs, np.arange(3))
        np.testing.assert_allclose(probs, 0.5)  # zero biases at init

    def test_batchnorm_breaks_node_permutation_invariance(self, tiny_vocab):
        # at init the affine parameters are position-uniform, which keeps the
        # network permutation-equivariant; once they differ per position (as
        # they do after training) node order matters
        spec = get_preset("gamlp")
        rng = np.random.default_rng(0)
        nodes = rng.random(size=(6, 7, 1)) * 3
        perm = rng.permutation(7)

        def forward(node_array):
            model = build_model(spec, tiny_vocab, seed=4)
            for i in range(3):
                k = tiny_vocab.n_nodes
                model.store[f"batchnorm.bn{i}.gamma"].value[...] = np.linspace(0.5, 2.0, k)
                model.store[f"batchnorm.bn{i}.beta"].value[...] = np.linspace(-1.0, 1.0, k)
            inputs = {"nodes": node_array, "labels": np.zeros(6, np.int64)}
            return model.forward_probs(inputs, np.arange(6), train=True)

        probs = forward(nodes)
        probs_permuted = forward(nodes[:, perm])
        assert np.abs(probs - probs_permuted).max() > 1e-6

    def test_no_batchnorm_is_node_permutation_invariant(self, tiny_vocab):
        spec = get_preset("gamlp-nobn")
        model = build_model(spec, tiny_vocab, seed=4)
        rng = np.random.default_rng(0)
        nodes = rng.random(size=(6, 7, 1)) * 3
        perm = rng.permutation(7)
        p1 = model.forward_probs({"nodes": nodes, "labels": np.zeros(6, np.int64)},
                                 np.arange(6))
        p2 = model.forward_probs({"nodes": nodes[:, perm],
                                  "labels": np.zeros(6, np.int64)}, np.arange(6))
        np.testing.assert_allclose(p1, p2, atol=1e-12)


class TestGraphModels:
    def gpa_spec(self, **kw):
        base = dict(kind="gpa", ggnn_output_channels=2, classifier_hidden=2)
        base.update(kw)
        return ModelSpec(**base)

    def test_zero_adjacency_ignores_object_features(self, tiny_vocab):
        spec = self.gpa_spec(graph_mode="zero")
        ds, graph = build_toy_setup(tiny_vocab, spec)
        model = build_model(spec, tiny_vocab, seed=4, graph=graph)
        inputs = prepare_inputs(ds.records, tiny_vocab, spec)
        probs1 = model.forward_probs(inputs, np.arange(6))
        inputs2 = dict(inputs)
        inputs2["cardinality"] = inputs["cardinality"] + 3.0
        probs2 = model.forward_probs(inputs2, np.arange(6))
        np.testing.assert_allclose(probs1, probs2, atol=1e-12)

    def test_tie_breaks_to_public(self, tiny_vocab):
        spec = self.gpa_spec()
        ds, graph = build_toy_setup(tiny_vocab, spec)
        model = build_model(spec, tiny_vocab, seed=4, graph=graph)
        model.store["classifier.fc2.w"].value[...] = 0.0
        model.store["classifier.fc2.b"].value[...] = 0.0
        inputs = prepare_inputs(ds.records, tiny_vocab, spec)
        preds = model.predict(inputs)
        assert not preds.any()

    def test_objects_binary_graph_masks_attention(self, tiny_vocab):
        spec = self.gpa_spec(graph_mode="objects-binary")
        ds, graph = build_toy_setup(tiny_vocab, spec)
        model = build_model(spec, tiny_vocab, seed=4, graph=graph)
        assert not model.grm.attention_mask.any()

    def test_pretrained_mode_freezes_scene_head(self, tiny_vocab):
        spec = self.gpa_spec(s2p_mode="pretrained")
        ds, graph = build_toy_setup(tiny_vocab, spec)
        model = build_model(spec, tiny_vocab, seed=4, graph=graph)
        assert not model.store["s2p.w"].trainable
        frozen = model.store.total_size("s2p")
        assert (model.store.total_size(trainable_only=True)
                == model.store.total_size() - frozen)

    def test_vocab_mismatch_rejected(self, tiny_vocab):
        spec = self.gpa_spec()
        other = default_vocabulary()
        graph = zero_graph(other)
        with pytest.raises(DataMismatchError):
            build_model(spec, tiny_vocab, seed=0, graph=graph)

    @pytest.mark.parametrize("kw", [
        {},  # full gpa: flag + reshape + joint scene head
        {"node_type_flag": False, "reshape_layer": False},
        {"privacy_source": "zeros", "s2p_mode": "none", "node_type_flag": False,
         "reshape_layer": False},
        {"privacy_source": "random", "s2p_mode": "none", "node_type_flag": False,
         "reshape_layer": False},
        {"graph_mode": "zero"},
    ], ids=["full", "no-flag-no-reshape", "zeros", "random", "zero-graph"])
    def test_gradcheck_full_gpa(self, tiny_vocab, kw):
        spec = self.gpa_spec(**kw)
        ds, graph = build_toy_setup(tiny_vocab, spec, n=8)
        model = build_model(spec, tiny_vocab, seed=10, graph=graph)
        nudge_parameters(model)
        inputs = prepare_inputs(ds.records, tiny_vocab, spec)
        idx = np.arange(4)
        labels = inputs["labels"][idx]

        def loss():
            probs = model.forward_probs(inputs, idx)
            return cross_entropy_loss(probs, labels)[0]

        def backward():
            probs = model.forward_probs(inputs, idx)
            _, dprobs = cross_entropy_loss(probs, labels)
            model.backward(dprobs)

        report = gradcheck(loss, backward, model.store, tolerance=1e-4)
        assert report.passed, report.failures()

    def test_gradcheck_gip_desk(self, tiny_vocab):
        spec = ModelSpec(kind="gip", feature_scheme="deep", deep_dim=3,
                         ggnn_output_channels=2, classifier_hidden=4,
                         privacy_source="deep_projection", reshape_layer=False)
        ds, graph = build_toy_setup(tiny_vocab, spec, n=8, with_deep=True)
        model = build_model(spec, tiny_vocab, seed=11, graph=graph)
        nudge_parameters(model)
        inputs = prepare_inputs(ds.records, tiny_vocab, spec)
        idx = np.arange(4)
        labels = inputs["labels"][idx]

        def loss():
            return cross_entropy_loss(model.forward_probs(inputs, idx), labels)[0]

        def backward():
            probs = model.forward_probs(inputs, idx)
            _, dprobs = cross_entropy_loss(probs, labels)
            model.backward(dprobs)

        report = gradcheck(loss, backward, model.store, tolerance=1e-4,
                           max_entries_per_slot=40,
                           rng=np.random.default_rng(0))
        assert report.passed, report.failures()


class TestFullModelGradients:
    @pytest.mark.parametrize("preset", ["s2p", "s2p-mlp1", "mlp", "gamlp",
                                        "gamlp-nobn"])
    def test_gradcheck(self, tiny_vocab, preset):
        spec = get_preset(preset)
        ds, _ = build_toy_setup(tiny_vocab, spec, n=10)
        stats = fit_stats_for_spec(spec, ds.records, tiny_vocab)
        model = build_model(spec, tiny_vocab, seed=6)
        nudge_parameters(model)
        inputs = prepare_inputs(ds.records, tiny_vocab, spec, stats)
        idx = np.arange(6)
        labels = inputs["labels"][idx]

        def loss():
            return cross_entropy_loss(
                model.forward_probs(inputs, idx, train=True), labels)[0]

        def backward():
            probs = model.forward_probs(inputs, idx, train=True)
            _, dprobs = cross_entropy_loss(probs, labels)
            model.backward(dprobs)

        report = gradcheck(loss, backward, model.store, tolerance=1e-4,
                           max_entries_per_slot=60,
                           rng=np.random.default_rng(1))
        assert report.passed, report.failures()
