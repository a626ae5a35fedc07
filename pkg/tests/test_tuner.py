import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import sparrowforest.tuner as tuner
from sparrowforest import forest as rf
from sparrowforest.dataset import encode, make_synthetic_dataset, stratified_split_indices
from sparrowforest.errors import ConfigError
from sparrowforest.issa import IssaConfig
from sparrowforest.ssa import SsaConfig
from sparrowforest.tuner import (
    CvFitness,
    ExperimentConfig,
    compare,
    decode,
    make_cv_folds,
    run_experiment,
    search_space,
)

P = 5  # feature columns after encoding


def vec(depth=8.0, crit=0.2, leaf=2.0, mtry=0.6, mask=(0.9, 0.9, 0.9, 0.9, 0.9)):
    return np.array([depth, crit, leaf, mtry, *mask])


def tiny_config(seed=0, **kw):
    base = SsaConfig(population_size=4, max_iterations=2)
    defaults = dict(
        seed=seed,
        folds=3,
        n_trees=5,
        ssa=base,
        issa=IssaConfig(base=base, ils_restarts=2),
    )
    defaults.update(kw)
    return ExperimentConfig(**defaults)


class TestDecode:
    def test_criterion_threshold(self):
        assert decode(vec(crit=0.49), P).split_criterion == "gini"
        assert decode(vec(crit=0.5), P).split_criterion == "entropy"

    def test_mask_repair_rule(self):
        params = decode(vec(mask=(0.1, 0.2, 0.3, 0.45, 0.05)), P)
        assert params.feature_mask == (False, False, False, True, False)

    def test_bin_center_round_trip(self):
        for depth in (1, 7, 20):
            for leaf in (1, 5, 10):
                for crit, raw in (("gini", 0.2), ("entropy", 0.8)):
                    mask = (True, False, True, True, False)
                    raw_mask = tuple(0.9 if b else 0.1 for b in mask)
                    active = sum(mask)
                    for mtry in range(1, active + 1):
                        v = vec(depth, raw, leaf, mtry / active, raw_mask)
                        got = decode(v, P)
                        assert got.max_depth == depth
                        assert got.split_criterion == crit
                        assert got.min_samples_leaf == leaf
                        assert got.feature_mask == mask
                        assert got.mtry == mtry

    @given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=P + 4, max_size=P + 4))
    @settings(max_examples=200, deadline=None)
    def test_decode_totality(self, raw):
        space = search_space(P)
        v = space.lower + np.array(raw) * space.width
        params = decode(v, P)
        params.resolve(P)  # must validate cleanly
        assert 1 <= params.max_depth <= 20
        assert 1 <= params.min_samples_leaf <= 10
        assert sum(params.feature_mask) >= 1
        assert 1 <= params.mtry <= sum(params.feature_mask)

    def test_wrong_length_rejected(self):
        with pytest.raises(ConfigError):
            decode(np.zeros(3), P)


class TestCvFolds:
    def test_stratified_and_disjoint(self):
        y = np.array([1] * 30 + [2] * 45)
        folds = make_cv_folds(y, 5, seed=3)
        assert len(folds) == 5
        all_val = np.concatenate([v for _, v in folds])
        assert sorted(all_val.tolist()) == list(range(75))
        for train, val in folds:
            assert set(train) & set(val) == set()
            assert {1, 2} <= set(y[val].tolist())

    def test_deterministic(self):
        y = np.array([1, 2] * 20)
        a = make_cv_folds(y, 4, seed=9)
        b = make_cv_folds(y, 4, seed=9)
        for (t1, v1), (t2, v2) in zip(a, b):
            assert np.array_equal(t1, t2) and np.array_equal(v1, v2)

    def test_folds_minimum(self):
        with pytest.raises(ConfigError):
            make_cv_folds(np.array([1, 2, 1, 2]), 1, seed=0)


class TestFitness:
    def setup_method(self):
        rng = np.random.default_rng(0)
        self.X = np.ascontiguousarray(rng.uniform(0, 10, (120, P)))

    def test_separable_concept_near_zero(self):
        y = np.where(self.X[:, 3] > 5, 2, 1)
        fit = CvFitness(self.X, y, np.arange(120), folds=4, seed=1, n_trees=5)
        assert fit(vec(depth=4.0)) <= 0.05

    def test_random_labels_near_chance(self):
        rng = np.random.default_rng(5)
        y = rng.integers(1, 3, 120)
        fit = CvFitness(self.X, y, np.arange(120), folds=4, seed=1, n_trees=5)
        assert fit(vec(depth=3.0)) == pytest.approx(0.5, abs=0.1)

    def test_bit_identical_reevaluation(self):
        y = np.where(self.X[:, 0] > 5, 2, 1)
        fit = CvFitness(self.X, y, np.arange(120), folds=4, seed=2, n_trees=5)
        v = vec()
        assert fit(v) == fit(v)


class TestTestSetHygiene:
    def test_fitness_never_touches_test_rows(self, synthetic_small, monkeypatch):
        X, y = encode(synthetic_small)
        train_idx, test_idx = stratified_split_indices(y, 0.7, seed=4)
        touched = []
        real_take = tuner.take_rows

        def spying_take(X_, y_, idx):
            touched.extend(np.asarray(idx).tolist())
            return real_take(X_, y_, idx)

        monkeypatch.setattr(tuner, "take_rows", spying_take)
        cfg = tiny_config()
        tuner.tune_method(X, y, train_idx, "ssa-rf", cfg, opt_seed=1, cv_seed=2)
        test_set = set(test_idx.tolist())
        touched_test = [i for i in touched if i in test_set]
        assert touched, "instrumentation saw no row access at all"
        assert touched_test == []  # the hygiene counter must stay at zero


class TestRunExperiment:
    def test_report_shape_and_determinism(self, synthetic_small):
        cfg = tiny_config(seed=3)
        rep1, model1 = run_experiment(synthetic_small, "ssa-rf", cfg)
        rep2, model2 = run_experiment(synthetic_small, "ssa-rf", cfg)
        d1, d2 = rep1.to_dict(), rep2.to_dict()
        d1.pop("timing"), d2.pop("timing")
        assert d1 == d2
        probe, _ = encode(synthetic_small)
        assert np.array_equal(rf.predict(model1, probe), rf.predict(model2, probe))

    def test_rf_method_uses_defaults(self, synthetic_small):
        cfg = tiny_config(seed=1)
        rep, model = run_experiment(synthetic_small, "rf", cfg)
        assert rep.best_cv_fitness is None
        assert rep.optimizer_evaluations == 0
        assert model.params.n_trees == cfg.n_trees
        assert 0.0 <= rep.test_accuracy <= 1.0
        assert rep.metadata["learning_rate"] == 0.001
        assert rep.metadata["learning_rate_used"] is False

    def test_accuracies_and_confusions_consistent(self, synthetic_small):
        cfg = tiny_config(seed=2)
        rep, _ = run_experiment(synthetic_small, "issa-rf", cfg)
        for cm, acc, n in (
            (rep.train_confusion, rep.train_accuracy, 210),
            (rep.test_confusion, rep.test_accuracy, 90),
        ):
            total = sum(map(sum, cm))
            assert total == n
            assert acc == pytest.approx((cm[0][0] + cm[1][1]) / total)

    def test_unknown_method_rejected(self, synthetic_small):
        with pytest.raises(ConfigError):
            run_experiment(synthetic_small, "grid-search", tiny_config())


class TestCompare:
    def fake_report(self, method, train, test):
        return tuner.MethodReport(
            method=method,
            train_accuracy=train,
            test_accuracy=test,
            train_confusion=[[1, 0], [0, 1]],
            test_confusion=[[1, 0], [0, 1]],
            hyperparams={},
            best_cv_fitness=None,
            optimizer_evaluations=0,
            seeds={},
            metadata={},
            wall_time_s=0.0,
        )

    def test_three_entry_grid(self):
        reports = [
            self.fake_report("rf", 0.93, 0.733),
            self.fake_report("ssa-rf", 0.975, 0.94),
            self.fake_report("issa-rf", 1.0, 1.0),
        ]
        comp = compare(reports)
        grid = comp.grid()
        assert grid["train"] == {"rf": 0.93, "ssa-rf": 0.975, "issa-rf": 1.0}
        assert grid["test"]["ssa-rf"] == 0.94
        table = comp.text_table()
        lines = table.strip().splitlines()
        assert lines[0].split() == ["RF", "SSA-RF", "ISSA-RF"]
        assert lines[1].startswith("Train") and lines[2].startswith("Test")

    def test_single_entry_passthrough(self):
        comp = compare([self.fake_report("rf", 0.9, 0.8)])
        assert comp.grid()["test"] == {"rf": 0.8}

    def test_values_taken_verbatim(self):
        rep = self.fake_report("rf", 0.93125, 0.7333)
        comp = compare([rep])
        assert comp.grid()["train"]["rf"] == 0.93125

    def test_duplicate_method_rejected(self):
        with pytest.raises(ConfigError):
            compare([self.fake_report("rf", 1, 1), self.fake_report("rf", 1, 1)])

    def test_json_round_trip(self):
        comp = compare([self.fake_report("rf", 0.9, 0.8)])
        doc = json.loads(json.dumps(comp.to_dict()))
        assert doc["accuracy_grid"]["train"]["rf"] == 0.9
