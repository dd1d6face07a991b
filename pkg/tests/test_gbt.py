"""Tests for the boosted-tree regressor, feature building, and model persistence."""

from __future__ import annotations

import json
import random

import numpy as np
import pytest
from sklearn.base import clone

from conftest import make_merged_row
from playmetrics.errors import EmptyDatasetError, ModelLoadError
from playmetrics.gbt import (
    BINARY_FEATURES,
    FEATURE_NAMES,
    PRICE_FEATURES,
    BoostedTreeRegressor,
    build_feature_matrix,
    evaluate,
    feature_vector,
    genre_influence,
    load_model,
    save_model,
    tree_predict,
)
from playmetrics.schema import DESIGN_ELEMENTS


def rng_binary_matrix(rng, n, d=30):
    return np.array([[float(rng.randint(0, 1)) for _ in range(d)] for _ in range(n)])


class TestFeatures:
    def test_free_game_one_hot(self):
        row = make_merged_row("g1", price=0.0, avgs={"Gameplay": 3.0})
        vec = feature_vector(row.meta)
        assert vec[0] == 1.0  # Price_Free
        assert vec[1:6].sum() == 0.0
        assert len(vec) == 30

    def test_feature_name_layout(self):
        assert len(FEATURE_NAMES) == 30
        assert FEATURE_NAMES[:6] == PRICE_FEATURES
        assert FEATURE_NAMES[6:13] == BINARY_FEATURES
        assert FEATURE_NAMES[13] == "Action"
        assert FEATURE_NAMES[-1] == "Entertainment"

    def test_exactly_one_price_indicator(self):
        for price in (0.0, 2.0, 9.99, 19.0, 30.0, 99.0):
            row = make_merged_row("g", price=price, avgs={"Gameplay": 3.0})
            assert feature_vector(row.meta)[:6].sum() == 1.0

    def test_matrix_shape_and_labels(self):
        rows = [make_merged_row(f"g{i}", avgs={"Gameplay": 2.0 + i}) for i in range(3)]
        rows += [make_merged_row(f"h{i}", avgs={"Gameplay": 3.0}) for i in range(2)]
        dataset = build_feature_matrix(rows)
        assert dataset.X.shape == (5, 30)
        assert dataset.y.shape == (5,)
        assert dataset.y[0] == pytest.approx(2.0)

    def test_absent_overall_dropped(self):
        rows = [make_merged_row("good", avgs={"Gameplay": 4.0}),
                make_merged_row("bad", avgs={})]
        dataset = build_feature_matrix(rows)
        assert dataset.game_ids == ["good"]
        assert dataset.dropped_ids == ["bad"]

    def test_all_unlabeled_is_empty_dataset(self):
        with pytest.raises(EmptyDatasetError):
            build_feature_matrix([make_merged_row("g", avgs={})])


class TestTraining:
    def test_constant_labels_base_only_model(self):
        X = rng_binary_matrix(random.Random(0), 10)
        y = np.full(10, 3.0)
        model = BoostedTreeRegressor(n_rounds=5).fit(X, y)
        assert model.trees_ == []
        assert model.base_score_ == pytest.approx(3.0)
        probe = rng_binary_matrix(random.Random(1), 7)
        assert np.allclose(model.predict(probe), 3.0)

    def test_hand_solved_stump(self):
        # feature 0 perfectly splits labels {2, 4}; other columns constant
        X = np.zeros((6, 4))
        X[3:, 0] = 1.0
        y = np.array([2.0, 2.0, 2.0, 4.0, 4.0, 4.0])
        model = BoostedTreeRegressor(n_rounds=1, learning_rate=1.0, max_depth=1).fit(X, y)
        assert model.base_score_ == pytest.approx(3.0)
        assert len(model.trees_) == 1
        stump = model.trees_[0]
        assert stump["feature"] == 0
        assert stump["threshold"] == pytest.approx(0.5)
        assert stump["left"]["value"] == pytest.approx(-1.0)
        assert stump["right"]["value"] == pytest.approx(1.0)
        assert model.training_history_ == [pytest.approx(0.0)]
        assert np.allclose(model.predict(X), y)

    def test_mse_non_increasing_200_rows(self):
        rng = random.Random(17)
        X = rng_binary_matrix(rng, 200)
        y = (
            3.0
            + 0.8 * X[:, 0]
            - 0.5 * X[:, 3]
            + 0.3 * X[:, 7]
            + 0.2 * X[:, 12] * X[:, 20]
            + np.array([rng.gauss(0, 0.05) for _ in range(200)])
        )
        model = BoostedTreeRegressor(n_rounds=50).fit(X, y)
        history = model.training_history_
        assert len(history) == 50
        for before, after in zip(history, history[1:]):
            assert after <= before + 1e-12

    def test_exact_fit_small_dataset(self):
        X = np.array([[float(b) for b in f"{i:04b}"] for i in range(16)])
        y = 1.0 + X[:, 0] + 0.5 * X[:, 1] + 0.25 * X[:, 2] + 0.125 * X[:, 3]
        model = BoostedTreeRegressor(
            n_rounds=60, learning_rate=1.0, max_depth=5, min_samples_leaf=1
        ).fit(X, y)
        assert model.training_history_[-1] <= 1e-3

    def test_row_permutation_determinism(self):
        rng = random.Random(29)
        X = rng_binary_matrix(rng, 40)
        y = 2.0 + X[:, 2] - 0.5 * X[:, 9] + 0.25 * X[:, 17]
        model_a = BoostedTreeRegressor(n_rounds=10, seed=0).fit(X, y)
        order = list(range(40))
        random.Random(4).shuffle(order)
        model_b = BoostedTreeRegressor(n_rounds=10, seed=0).fit(X[order], y[order])
        probe = rng_binary_matrix(random.Random(5), 25)
        assert np.array_equal(model_a.predict(probe), model_b.predict(probe))

    def test_too_few_rows_rejected(self):
        with pytest.raises(ValueError):
            BoostedTreeRegressor().fit(np.zeros((1, 3)), np.array([1.0]))

    @pytest.mark.parametrize("params", [
        {"n_rounds": 0}, {"learning_rate": 0.0}, {"learning_rate": 1.5},
        {"max_depth": 0}, {"min_samples_leaf": 0},
    ])
    def test_bad_params_rejected_at_fit(self, params):
        X = np.zeros((4, 2))
        y = np.array([1.0, 2.0, 3.0, 4.0])
        with pytest.raises(ValueError):
            BoostedTreeRegressor(**params).fit(X, y)


class TestPredict:
    def test_zero_tree_model(self):
        model = BoostedTreeRegressor()
        model.n_features_in_ = 3
        model.feature_names_ = None
        model.base_score_ = 3.1
        model.trees_ = []
        model.training_history_ = []
        assert np.allclose(model.predict(np.zeros((4, 3))), 3.1)

    def test_manual_tree_walk(self):
        tree = {
            "feature": 1,
            "threshold": 0.5,
            "left": {"value": -0.5},
            "right": {"feature": 0, "threshold": 0.5,
                      "left": {"value": 0.25}, "right": {"value": 1.0}},
        }
        X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        assert list(tree_predict(tree, X)) == [-0.5, 0.25, 1.0]

    def test_additivity(self):
        rng = random.Random(31)
        X = rng_binary_matrix(rng, 30)
        y = 1.0 + X[:, 1] + 0.5 * X[:, 4]
        model = BoostedTreeRegressor(n_rounds=7, learning_rate=0.3).fit(X, y)
        probe = rng_binary_matrix(random.Random(32), 11)
        expected = np.full(len(probe), model.base_score_)
        for tree in model.trees_:
            expected = expected + model.learning_rate * tree_predict(tree, probe)
        assert np.array_equal(model.predict(probe), expected)

    def test_arity_mismatch(self):
        X = np.zeros((4, 3))
        y = np.array([1.0, 2.0, 1.0, 2.0])
        model = BoostedTreeRegressor(n_rounds=1).fit(X, y)
        with pytest.raises(ValueError):
            model.predict(np.zeros((2, 5)))


class TestEvaluate:
    def fit_simple(self):
        X = np.array([[0.0], [0.0], [1.0], [1.0]])
        y = np.array([2.0, 2.0, 4.0, 4.0])
        return BoostedTreeRegressor(n_rounds=1, learning_rate=1.0, max_depth=1,
                                    min_samples_leaf=1).fit(X, y), X, y

    def test_perfect_predictions(self):
        model, X, y = self.fit_simple()
        metrics = evaluate(model, X, y)
        assert metrics["mse"] == pytest.approx(0.0)
        assert metrics["mae"] == pytest.approx(0.0)
        assert metrics["r2"] == pytest.approx(1.0)

    def test_constant_prediction_r2_zero(self):
        X = np.array([[0.0], [0.0], [1.0], [1.0]])
        y = np.array([1.0, 3.0, 1.0, 3.0])  # feature carries no signal
        model = BoostedTreeRegressor(n_rounds=3).fit(X, y)
        metrics = evaluate(model, X, y)
        assert metrics["r2"] == pytest.approx(0.0, abs=1e-12)

    def test_zero_label_variance_r2_undefined(self):
        model, X, _ = self.fit_simple()
        metrics = evaluate(model, X, np.array([3.0, 3.0, 3.0, 3.0]))
        assert metrics["r2"] is None

    def test_matches_naive_oracle(self):
        model, X, y = self.fit_simple()
        probe_y = np.array([2.5, 1.5, 4.5, 3.5])
        metrics = evaluate(model, X, probe_y)
        predictions = model.predict(X)
        mse = sum((a - b) ** 2 for a, b in zip(probe_y, predictions)) / 4
        mae = sum(abs(a - b) for a, b in zip(probe_y, predictions)) / 4
        mean = sum(probe_y) / 4
        ss_tot = sum((v - mean) ** 2 for v in probe_y)
        ss_res = sum((a - b) ** 2 for a, b in zip(probe_y, predictions))
        assert metrics["mse"] == pytest.approx(mse, abs=1e-9)
        assert metrics["mae"] == pytest.approx(mae, abs=1e-9)
        assert metrics["r2"] == pytest.approx(1 - ss_res / ss_tot, abs=1e-9)


class TestGenreInfluence:
    def test_constant_model_scores_every_genre_equally(self):
        rows = [make_merged_row(f"g{i}", Action=1, Casual=(i % 2), avgs={"Gameplay": 3.0})
                for i in range(4)]
        dataset = build_feature_matrix(rows)
        model = BoostedTreeRegressor(n_rounds=3).fit(dataset.X, dataset.y)
        ranked = genre_influence(model, rows, vr=False)
        assert ranked
        assert all(score == pytest.approx(3.0) for _, score in ranked)

    def test_matches_brute_force_means(self):
        rows = [
            make_merged_row("a", price=0.0, Action=1, avgs={"Gameplay": 2.0}),
            make_merged_row("b", price=49.0, Action=1, Casual=1, avgs={"Gameplay": 4.0}),
            make_merged_row("c", price=49.0, Casual=1, avgs={"Gameplay": 5.0}),
        ]
        dataset = build_feature_matrix(rows)
        model = BoostedTreeRegressor(n_rounds=20, learning_rate=0.5,
                                     min_samples_leaf=1).fit(dataset.X, dataset.y)
        predictions = {row.game_id: model.predict(feature_vector(row.meta)[None, :])[0]
                       for row in rows}
        ranked = dict(genre_influence(model, rows, vr=False))
        assert ranked["Action"] == pytest.approx(
            (predictions["a"] + predictions["b"]) / 2
        )
        assert ranked["Casual"] == pytest.approx(
            (predictions["b"] + predictions["c"]) / 2
        )

    def test_sorted_descending(self):
        rows = [
            make_merged_row("a", price=0.0, Action=1, avgs={"Gameplay": 1.0}),
            make_merged_row("b", price=49.0, Casual=1, avgs={"Gameplay": 5.0}),
        ]
        dataset = build_feature_matrix(rows)
        model = BoostedTreeRegressor(n_rounds=10, learning_rate=1.0,
                                     min_samples_leaf=1).fit(dataset.X, dataset.y)
        ranked = genre_influence(model, rows, vr=False)
        values = [score for _, score in ranked]
        assert values == sorted(values, reverse=True)

    def test_platform_filter(self):
        rows = [make_merged_row("pc", Action=1, avgs={"Gameplay": 2.0}),
                make_merged_row("vr", vr=True, Action=1, avgs={"Gameplay": 4.0})]
        dataset = build_feature_matrix(rows)
        model = BoostedTreeRegressor(n_rounds=5, learning_rate=1.0,
                                     min_samples_leaf=1).fit(dataset.X, dataset.y)
        pc = dict(genre_influence(model, rows, vr=False))
        vr = dict(genre_influence(model, rows, vr=True))
        assert set(pc) == {"Action"}
        assert set(vr) == {"Action"}
        assert pc["Action"] != pytest.approx(vr["Action"])


class TestPersistence:
    def fit_model(self):
        rng = random.Random(41)
        X = rng_binary_matrix(rng, 50)
        y = 2.0 + 0.7 * X[:, 0] - 0.4 * X[:, 8] + 0.1 * X[:, 21]
        return BoostedTreeRegressor(n_rounds=12, learning_rate=0.2).fit(
            X, y, feature_names=list(FEATURE_NAMES)
        )

    def test_round_trip_predictions_bit_equal(self, tmp_path):
        model = self.fit_model()
        path = tmp_path / "model.json"
        save_model(model, path)
        loaded = load_model(path)
        probes = rng_binary_matrix(random.Random(43), 100)
        assert np.array_equal(model.predict(probes), loaded.predict(probes))

    def test_stump_reloads_field_by_field(self, tmp_path):
        X = np.zeros((4, 2))
        X[2:, 1] = 1.0
        y = np.array([1.0, 1.0, 5.0, 5.0])
        model = BoostedTreeRegressor(n_rounds=1, learning_rate=1.0, max_depth=1,
                                     min_samples_leaf=1).fit(X, y)
        path = tmp_path / "stump.json"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.base_score_ == model.base_score_
        assert loaded.learning_rate == model.learning_rate
        assert loaded.trees_ == model.trees_

    def test_truncated_file(self, tmp_path):
        model = self.fit_model()
        path = tmp_path / "model.json"
        save_model(model, path)
        path.write_text(path.read_text()[: 40], encoding="utf-8")
        with pytest.raises(ModelLoadError):
            load_model(path)

    def test_version_mismatch(self, tmp_path):
        model = self.fit_model()
        path = tmp_path / "model.json"
        save_model(model, path)
        payload = json.loads(path.read_text())
        payload["version"] = 99
        path.write_text(json.dumps(payload), encoding="utf-8")
        with pytest.raises(ModelLoadError):
            load_model(path)

    def test_corrupt_tree_rejected(self, tmp_path):
        model = self.fit_model()
        path = tmp_path / "model.json"
        save_model(model, path)
        payload = json.loads(path.read_text())
        payload["trees"] = [{"feature": 99, "threshold": 0.5,
                             "left": {"value": 0.0}, "right": {"value": 0.0}}]
        path.write_text(json.dumps(payload), encoding="utf-8")
        with pytest.raises(ModelLoadError):
            load_model(path)

    def test_model_file_schema(self, tmp_path):
        model = self.fit_model()
        path = tmp_path / "model.json"
        save_model(model, path)
        payload = json.loads(path.read_text())
        assert set(payload) == {"version", "feature_names", "base_score",
                                "learning_rate", "trees"}
        assert payload["feature_names"] == list(FEATURE_NAMES)


class TestSklearnApi:
    def test_get_set_params_and_clone(self):
        model = BoostedTreeRegressor(n_rounds=7, learning_rate=0.25)
        params = model.get_params()
        assert params["n_rounds"] == 7
        assert params["learning_rate"] == 0.25
        cloned = clone(model)
        assert cloned.get_params() == params
        model.set_params(max_depth=2)
        assert model.max_depth == 2

    def test_score_method_available(self):
        X = np.array([[0.0], [0.0], [1.0], [1.0]])
        y = np.array([2.0, 2.0, 4.0, 4.0])
        model = BoostedTreeRegressor(n_rounds=1, learning_rate=1.0, max_depth=1,
                                     min_samples_leaf=1).fit(X, y)
        assert model.score(X, y) == pytest.approx(1.0)
