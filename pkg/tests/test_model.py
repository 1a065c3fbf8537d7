"""Composite model: fusion, training protocol, sweep, ablation, the plain-graph
split experiment, and checkpointing."""

import numpy as np
import pytest
import scipy.sparse as sp

from ggnn.errors import ConfigError
from ggnn.kernels import KernelConfig, kernel_apply
from ggnn.model import (ABLATION_SUBSETS, FusionInputs, SweepPoint, TrainConfig,
                        ablate, evaluate, ggnn_backward, ggnn_forward,
                        ggnn_train, load_model, plain_split_experiment,
                        prepare_fusion_inputs, save_model, sweep_alpha_beta,
                        _init_branches)
from ggnn.nn import AdamConfig, finite_difference_check, masked_cross_entropy, softmax_rows
from ggnn.pretrain import EmbeddingTable

from conftest import build_graph


def kcfg(hidden=8, dropout_p=0.0, kind="gcn", **kw):
    return KernelConfig(kind=kind, input_dim=1, hidden_dim=hidden,
                        output_dim=1, dropout_p=dropout_p, **kw)


def tcfg(alpha=0.0, beta=0.0, epochs=20, seed=0, mode="attributed", lr=0.01,
         wd=5e-4, **kernel_kw):
    return TrainConfig(kernel=kcfg(**kernel_kw), alpha=alpha, beta=beta,
                       epochs=epochs, seed=seed, mode=mode,
                       adam=AdamConfig(learning_rate=lr, weight_decay=wd))


def embedding_for(g, dim=6, seed=0):
    return EmbeddingTable(np.random.default_rng(seed).normal(size=(g.n, dim)))


@pytest.fixture
def fused_inputs(sbm, sbm_pretrained):
    struct, attr = sbm_pretrained
    return prepare_fusion_inputs(sbm, struct, attr)


class TestTrainConfig:
    def test_mode_checked(self):
        with pytest.raises(ConfigError):
            tcfg(mode="semi")

    def test_negative_weights_rejected(self):
        with pytest.raises(ConfigError):
            tcfg(alpha=-0.1)
        with pytest.raises(ConfigError):
            tcfg(beta=-0.1)

    def test_plain_forbids_fusion_weights(self):
        with pytest.raises(ConfigError):
            tcfg(mode="plain", alpha=0.01)

    def test_negative_epochs_rejected(self):
        with pytest.raises(ConfigError):
            tcfg(epochs=-1)


class TestPrepareInputs:
    def test_tables_standardized_once(self, sbm):
        table = embedding_for(sbm)
        inputs = prepare_fusion_inputs(sbm, struct_table=table)
        rows = inputs.x_struct
        assert np.max(np.abs(rows.mean(axis=1))) < 1e-9
        assert np.max(np.abs(rows.std(axis=1) - 1.0)) < 1e-9
        assert inputs.x_raw is sbm.attributes

    def test_row_count_mismatch_rejected(self, sbm):
        bad = EmbeddingTable(np.zeros((sbm.n + 1, 4)))
        with pytest.raises(ConfigError):
            prepare_fusion_inputs(sbm, struct_table=bad)

    def test_include_raw_false(self, sbm):
        inputs = prepare_fusion_inputs(sbm, struct_table=embedding_for(sbm),
                                       include_raw=False)
        assert inputs.x_raw is None


class TestForward:
    def test_alpha_beta_zero_equals_raw_branch(self, sbm, fused_inputs):
        cfg = tcfg(alpha=0.0, beta=0.0)
        plan, states, _ = _init_branches(sbm, fused_inputs, cfg)
        assert set(states) == {"raw"}
        h = ggnn_forward(fused_inputs, sbm, states, cfg)
        raw_only = kernel_apply(states["raw"], sbm, fused_inputs.x_raw)
        assert np.array_equal(h, raw_only)

    def test_fusion_is_weighted_sum_of_branches(self, sbm, fused_inputs):
        cfg = tcfg(alpha=0.7, beta=0.3)
        plan, states, _ = _init_branches(sbm, fused_inputs, cfg)
        h = ggnn_forward(fused_inputs, sbm, states, cfg)
        parts = {
            "structure": kernel_apply(states["structure"], sbm, fused_inputs.x_struct),
            "attribute": kernel_apply(states["attribute"], sbm, fused_inputs.x_attr),
            "raw": kernel_apply(states["raw"], sbm, fused_inputs.x_raw),
        }
        manual = 0.7 * parts["structure"] + 0.3 * parts["attribute"] + parts["raw"]
        assert np.max(np.abs(h - manual)) < 1e-10

    def test_fusion_linear_in_alpha_beta(self, sbm, fused_inputs):
        base = tcfg(alpha=0.02, beta=0.01)
        plan, states, _ = _init_branches(sbm, fused_inputs, base)
        h = {}
        for a, b in [(0.02, 0.01), (0.04, 0.02), (0.0, 0.0)]:
            cfg = tcfg(alpha=a, beta=b)
            h[(a, b)] = (ggnn_forward(fused_inputs, sbm, states, cfg)
                         if (a, b) != (0.0, 0.0)
                         else kernel_apply(states["raw"], sbm, fused_inputs.x_raw))
        lhs = h[(0.04, 0.02)] - h[(0.0, 0.0)]
        rhs = 2.0 * (h[(0.02, 0.01)] - h[(0.0, 0.0)])
        assert np.max(np.abs(lhs - rhs)) < 1e-10

    def test_zero_alpha_ignores_structure_contents(self, sbm, fused_inputs):
        cfg = tcfg(alpha=0.0, beta=0.01)
        plan, states, _ = _init_branches(sbm, fused_inputs, cfg)
        h1 = ggnn_forward(fused_inputs, sbm, states, cfg)
        scrambled = FusionInputs(
            x_struct=np.random.default_rng(1).normal(size=fused_inputs.x_struct.shape),
            x_attr=fused_inputs.x_attr, x_raw=fused_inputs.x_raw)
        h2 = ggnn_forward(scrambled, sbm, states, cfg)
        assert np.array_equal(h1, h2)

    def test_plain_mode_uses_structure_only(self, sbm, fused_inputs):
        cfg = tcfg(mode="plain")
        plan, states, _ = _init_branches(sbm, fused_inputs, cfg)
        assert set(states) == {"structure"}
        h1 = ggnn_forward(fused_inputs, sbm, states, cfg)
        no_others = FusionInputs(x_struct=fused_inputs.x_struct)
        h2 = ggnn_forward(no_others, sbm, states, cfg)
        assert np.array_equal(h1, h2)

    def test_missing_required_input(self, sbm):
        cfg = tcfg(alpha=0.01)
        inputs = FusionInputs(x_raw=sbm.attributes)  # no structure table
        with pytest.raises(ConfigError):
            _init_branches(sbm, inputs, cfg)

    def test_plain_requires_structure(self, sbm):
        cfg = tcfg(mode="plain")
        with pytest.raises(ConfigError):
            _init_branches(sbm, FusionInputs(x_raw=sbm.attributes), cfg)


class TestWholeModelGradient:
    def test_finite_difference_through_fusion(self, sbm, fused_inputs):
        cfg = tcfg(alpha=0.05, beta=0.03, hidden=5)
        plan, states, _ = _init_branches(sbm, fused_inputs, cfg)

        def loss_fn():
            h = ggnn_forward(fused_inputs, sbm, states, cfg)
            z = softmax_rows(h)
            return masked_cross_entropy(z, sbm.labels, sbm.train_mask)[0]

        for st in states.values():
            st.zero_grads()
        h = ggnn_forward(fused_inputs, sbm, states, cfg)
        z = softmax_rows(h)
        _, dlogits = masked_cross_entropy(z, sbm.labels, sbm.train_mask)
        ggnn_backward(states, cfg, dlogits)
        params = [p for st in states.values() for p in st.params.values()]
        assert finite_difference_check(loss_fn, params, max_coords_per_param=6) < 1e-4


class TestTraining:
    def test_separable_fixture_fits(self, separable):
        cfg = tcfg(epochs=200, wd=0.0)
        inputs = prepare_fusion_inputs(separable)
        res = ggnn_train(inputs, separable, cfg)
        # with 2 classes and m train nodes, a mean NLL below ln(2)/m forces
        # every train node's correct-class probability above 1/2, i.e. train
        # accuracy 1.0 at that epoch
        m = int(separable.train_mask.sum())
        assert min(e.train_loss for e in res.history) < np.log(2) / m
        assert res.best_valid_acc == 1.0

    def test_epoch_one_loss_near_log_c(self, sbm, fused_inputs):
        cfg = tcfg(alpha=0.01, beta=0.01, epochs=1)
        res = ggnn_train(fused_inputs, sbm, cfg)
        assert res.history[0].train_loss == pytest.approx(np.log(sbm.num_classes),
                                                          rel=0.2)

    def test_zero_epochs(self, sbm, fused_inputs):
        cfg = tcfg(epochs=0)
        res = ggnn_train(fused_inputs, sbm, cfg)
        assert res.history == []
        assert res.best_epoch == 0
        fresh_plan, fresh_states, _ = _init_branches(sbm, fused_inputs, cfg)
        for name, st in res.states.items():
            for k, p in st.params.items():
                assert np.array_equal(p.value, fresh_states[name].params[k].value)

    def test_deterministic_histories(self, sbm, fused_inputs):
        cfg = tcfg(alpha=0.01, beta=0.02, epochs=8, dropout_p=0.5)
        r1 = ggnn_train(fused_inputs, sbm, cfg)
        r2 = ggnn_train(fused_inputs, sbm, cfg)
        assert [(e.train_loss, e.valid_acc) for e in r1.history] == \
               [(e.train_loss, e.valid_acc) for e in r2.history]

    def test_zero_weight_branches_do_not_shift_rng(self, sbm, fused_inputs):
        # alpha=beta=0 with full inputs must be bit-identical to a raw-only run
        cfg = tcfg(epochs=6, dropout_p=0.5)
        full = ggnn_train(fused_inputs, sbm, cfg)
        raw_only = ggnn_train(FusionInputs(x_raw=fused_inputs.x_raw), sbm, cfg)
        assert [e.train_loss for e in full.history] == \
               [e.train_loss for e in raw_only.history]
        for k, p in full.states["raw"].params.items():
            assert np.array_equal(p.value, raw_only.states["raw"].params[k].value)

    def test_reported_test_acc_is_at_best_valid(self, sbm, fused_inputs):
        cfg = tcfg(alpha=0.01, epochs=10)
        res = ggnn_train(fused_inputs, sbm, cfg)
        valid_by_epoch = [e.valid_acc for e in res.history]
        assert res.best_valid_acc == max(valid_by_epoch + [res.best_valid_acc])
        if res.best_epoch > 0:
            stats = res.history[res.best_epoch - 1]
            assert stats.valid_acc == res.best_valid_acc
            assert stats.test_acc == res.test_acc

    def test_parameters_restored_to_best(self, sbm, fused_inputs):
        cfg = tcfg(alpha=0.01, epochs=10)
        res = ggnn_train(fused_inputs, sbm, cfg)
        assert evaluate(res.states, fused_inputs, sbm, cfg, "test") == res.test_acc
        assert evaluate(res.states, fused_inputs, sbm, cfg,
                        "valid") == res.best_valid_acc

    def test_empty_valid_mask_rejected(self, separable):
        g = separable.with_masks(separable.train_mask,
                                 np.zeros(separable.n, dtype=bool),
                                 separable.test_mask)
        with pytest.raises(ConfigError):
            ggnn_train(prepare_fusion_inputs(g), g, tcfg())


class TestEvaluate:
    def test_mask_name_and_array_agree(self, sbm, fused_inputs):
        cfg = tcfg(epochs=2)
        res = ggnn_train(fused_inputs, sbm, cfg)
        by_name = evaluate(res.states, fused_inputs, sbm, cfg, "test")
        by_array = evaluate(res.states, fused_inputs, sbm, cfg, sbm.test_mask)
        assert by_name == by_array

    def test_unknown_mask_name(self, sbm, fused_inputs):
        cfg = tcfg(epochs=1)
        res = ggnn_train(fused_inputs, sbm, cfg)
        with pytest.raises(ConfigError):
            evaluate(res.states, fused_inputs, sbm, cfg, "holdout")

    def test_empty_mask_rejected(self, sbm, fused_inputs):
        cfg = tcfg(epochs=1)
        res = ggnn_train(fused_inputs, sbm, cfg)
        with pytest.raises(ConfigError):
            evaluate(res.states, fused_inputs, sbm, cfg,
                     np.zeros(sbm.n, dtype=bool))


class TestSweep:
    def test_single_point_grid(self, sbm, fused_inputs):
        cfg = tcfg(epochs=3)
        res = sweep_alpha_beta(fused_inputs, sbm, cfg, [(0.01, 0.02)])
        assert len(res.points) == 1
        assert (res.best.alpha, res.best.beta) == (0.01, 0.02)

    def test_best_has_max_valid_acc(self, sbm, fused_inputs):
        cfg = tcfg(epochs=3)
        res = sweep_alpha_beta(fused_inputs, sbm, cfg,
                               [(0.001, 0.001), (0.01, 0.01), (0.05, 0.05)])
        assert res.best.valid_acc == max(p.valid_acc for p in res.points)

    def test_points_get_distinct_derived_seeds(self, sbm, fused_inputs):
        cfg = tcfg(epochs=1, seed=42)
        res = sweep_alpha_beta(fused_inputs, sbm, cfg,
                               [(0.001, 0.001), (0.01, 0.01)])
        seeds = {p.seed for p in res.points}
        assert len(seeds) == 2
        assert 42 not in seeds  # derived, not reused

    def test_tie_breaks_toward_smaller_alpha_then_beta(self, sbm, fused_inputs):
        fabricated = [
            SweepPoint(0.02, 0.001, 0.9, 0.5, 1, 0),
            SweepPoint(0.001, 0.05, 0.9, 0.6, 1, 0),
            SweepPoint(0.001, 0.002, 0.9, 0.7, 1, 0),
            SweepPoint(0.005, 0.005, 0.8, 0.9, 1, 0),
        ]

        def fake_map(fn, cfgs):
            return fabricated

        res = sweep_alpha_beta(fused_inputs, sbm, tcfg(epochs=1),
                               [(p.alpha, p.beta) for p in fabricated],
                               map_fn=fake_map)
        assert (res.best.alpha, res.best.beta) == (0.001, 0.002)

    def test_map_fn_order_independent(self, sbm, fused_inputs):
        cfg = tcfg(epochs=2)
        grid = [(0.001, 0.01), (0.01, 0.001)]

        def reversed_map(fn, items):
            items = list(items)
            return list(reversed([fn(c) for c in reversed(items)]))

        r1 = sweep_alpha_beta(fused_inputs, sbm, cfg, grid)
        r2 = sweep_alpha_beta(fused_inputs, sbm, cfg, grid, map_fn=reversed_map)
        assert (r1.best.alpha, r1.best.beta) == (r2.best.alpha, r2.best.beta)
        assert r1.best.test_acc == r2.best.test_acc

    def test_empty_grid_rejected(self, sbm, fused_inputs):
        with pytest.raises(ConfigError):
            sweep_alpha_beta(fused_inputs, sbm, tcfg(), [])

    def test_noise_features_prefer_zero_weights(self, sbm):
        # pretrained tables of pure noise: the (0, 0) point should win the
        # sweep in a majority of seeds
        wins = 0
        for seed in range(5):
            rng = np.random.default_rng(100 + seed)
            noise_inputs = prepare_fusion_inputs(
                sbm, EmbeddingTable(rng.normal(size=(sbm.n, 6))),
                EmbeddingTable(rng.normal(size=(sbm.n, 6))))
            cfg = tcfg(epochs=25, seed=seed)
            res = sweep_alpha_beta(noise_inputs, sbm, cfg,
                                   [(0.0, 0.0), (0.5, 0.5)])
            if (res.best.alpha, res.best.beta) == (0.0, 0.0):
                wins += 1
        assert wins >= 3


class TestAblate:
    def test_unknown_subset(self, sbm, fused_inputs):
        with pytest.raises(ConfigError):
            ablate(fused_inputs, sbm, tcfg(), "X+Xz")

    def test_plain_mode_rejected(self, sbm, fused_inputs):
        with pytest.raises(ConfigError):
            ablate(fused_inputs, sbm, tcfg(mode="plain"), "X")

    def test_x_subset_equals_baseline_run(self, sbm, fused_inputs):
        cfg = tcfg(alpha=0.01, beta=0.01, epochs=4)
        acc = ablate(fused_inputs, sbm, cfg, "X")
        base = ggnn_train(FusionInputs(x_raw=fused_inputs.x_raw), sbm,
                          tcfg(epochs=4)).test_acc
        assert acc == base

    def test_full_subset_equals_direct_training(self, sbm, fused_inputs):
        cfg = tcfg(alpha=0.01, beta=0.01, epochs=4)
        assert ablate(fused_inputs, sbm, cfg, "X+Xs+Xa") == \
            ggnn_train(fused_inputs, sbm, cfg).test_acc

    def test_all_subsets_return_accuracies(self, sbm, fused_inputs):
        cfg = tcfg(alpha=0.01, beta=0.01, epochs=3)
        for subset in ABLATION_SUBSETS:
            acc = ablate(fused_inputs, sbm, cfg, subset)
            assert 0.0 <= acc <= 1.0

    def test_concat_requires_all_inputs(self, sbm, fused_inputs):
        partial = FusionInputs(x_struct=fused_inputs.x_struct,
                               x_raw=fused_inputs.x_raw)
        with pytest.raises(ConfigError):
            ablate(partial, sbm, tcfg(), "concat")

    def test_concat_width_is_sum_of_parts(self, sbm, fused_inputs):
        from ggnn.model import _concat_features
        cat = _concat_features(fused_inputs)
        want = (sp.csr_matrix(fused_inputs.x_raw).shape[1]
                + fused_inputs.x_struct.shape[1] + fused_inputs.x_attr.shape[1])
        assert cat.shape == (sbm.n, want)


class TestPlainSplit:
    def plain_setup(self, sbm, sbm_pretrained):
        struct, _ = sbm_pretrained
        inputs = prepare_fusion_inputs(sbm, struct, include_raw=False)
        cfg = tcfg(mode="plain", epochs=5)
        return inputs, cfg

    def test_result_shape(self, sbm, sbm_pretrained):
        inputs, cfg = self.plain_setup(sbm, sbm_pretrained)
        out = plain_split_experiment(sbm, [0.3, 0.5], 3, cfg, inputs)
        assert sorted(out) == [0.3, 0.5]
        for accs in out.values():
            assert len(accs) == 3
            assert all(0.0 <= a <= 1.0 for a in accs)

    def test_deterministic(self, sbm, sbm_pretrained):
        inputs, cfg = self.plain_setup(sbm, sbm_pretrained)
        o1 = plain_split_experiment(sbm, [0.4], 2, cfg, inputs)
        o2 = plain_split_experiment(sbm, [0.4], 2, cfg, inputs)
        assert o1 == o2

    def test_ratio_validation(self, sbm, sbm_pretrained):
        inputs, cfg = self.plain_setup(sbm, sbm_pretrained)
        for ratio in (0.0, 1.0, -0.5):
            with pytest.raises(ConfigError):
                plain_split_experiment(sbm, [ratio], 1, cfg, inputs)

    def test_requires_plain_mode(self, sbm, sbm_pretrained):
        inputs, _ = self.plain_setup(sbm, sbm_pretrained)
        with pytest.raises(ConfigError):
            plain_split_experiment(sbm, [0.5], 1, tcfg(), inputs)

    def test_requires_full_labels(self, sbm_pretrained, separable):
        g = separable
        labels = g.labels.copy()
        labels[0] = -1
        g2 = build_graph(g.n, [], labels=labels)
        g2.adjacency = g.adjacency
        cfg = tcfg(mode="plain", epochs=1)
        inputs = FusionInputs(x_struct=np.random.default_rng(0).normal(size=(g.n, 4)))
        with pytest.raises(ConfigError):
            plain_split_experiment(g2, [0.5], 1, cfg, inputs)


class TestCheckpoint:
    def test_round_trip(self, tmp_path, sbm, fused_inputs):
        cfg = tcfg(alpha=0.01, beta=0.02, epochs=3)
        res = ggnn_train(fused_inputs, sbm, cfg)
        path = str(tmp_path / "model.npz")
        save_model(res, path)
        states, meta = load_model(path)
        assert meta["alpha"] == 0.01
        assert meta["test_acc"] == res.test_acc
        assert set(states) == set(res.states)
        for b, st in states.items():
            for k, p in st.params.items():
                assert np.array_equal(p.value, res.states[b].params[k].value)

    def test_loaded_states_evaluate_identically(self, tmp_path, sbm, fused_inputs):
        cfg = tcfg(alpha=0.01, epochs=3)
        res = ggnn_train(fused_inputs, sbm, cfg)
        path = str(tmp_path / "m.npz")
        save_model(res, path)
        states, _ = load_model(path)
        assert evaluate(states, fused_inputs, sbm, cfg, "test") == res.test_acc

    def test_parent_directory_created(self, tmp_path, sbm, fused_inputs):
        res = ggnn_train(fused_inputs, sbm, tcfg(epochs=1))
        path = str(tmp_path / "deep" / "dir" / "m.npz")
        save_model(res, path)
        states, _ = load_model(path)
        assert states
