"""Random forest and gradient boosting against brute-force split
oracles, a closed-form stump, and structural invariants."""

import numpy as np
import pytest

from botsift.models import ForestParams, predict
from botsift.models.base import ModelArtifact, load_artifact
from botsift.models.boosting import (BoostingParams, best_sse_split,
                                     grow_regression_tree, score_boosting,
                                     train_boosting, tree_value)
from botsift.models.forest import (best_gini_split, grow_tree,
                                   score_forest, train_random_forest,
                                   tree_predict)
from botsift.windows import Dataset

SIGMOID_2 = 0.8807970779778823    # 1 / (1 + e^-2)
SIGMOID_M2 = 0.11920292202211755  # 1 / (1 + e^+2)


def gini_oracle(x, y):
    """Exhaustive scan over midpoints of consecutive distinct values."""
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    n = len(x)

    def impurity(labels):
        if len(labels) == 0:
            return 0.0
        p = labels.mean()
        return 1.0 - p * p - (1.0 - p) * (1.0 - p)

    parent = impurity(ys)
    best = None
    for i in range(n - 1):
        if xs[i] == xs[i + 1]:
            continue
        threshold = (xs[i] + xs[i + 1]) / 2.0
        left, right = ys[:i + 1], ys[i + 1:]
        weighted = (len(left) * impurity(left)
                    + len(right) * impurity(right)) / n
        decrease = parent - weighted
        if best is None or decrease > best[0]:
            best = (decrease, threshold)
    return best


def sse_oracle(x, t):
    order = np.argsort(x, kind="stable")
    xs, ts = x[order], t[order]
    n = len(x)

    def sse(vals):
        return float(np.sum((vals - vals.mean()) ** 2)) if len(vals) else 0.0

    parent = sse(ts)
    best = None
    for i in range(n - 1):
        if xs[i] == xs[i + 1]:
            continue
        threshold = (xs[i] + xs[i + 1]) / 2.0
        decrease = parent - sse(ts[:i + 1]) - sse(ts[i + 1:])
        if best is None or decrease > best[0]:
            best = (decrease, threshold)
    return best


class TestGiniSplits:
    def test_split_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(33)
        for _ in range(200):
            n = int(rng.integers(2, 40))
            x = np.round(rng.normal(size=n), 1)  # force duplicate values
            y = rng.integers(0, 2, size=n)
            found = best_gini_split(x, y)
            expected = gini_oracle(x, y)
            if expected is None:
                assert found is None
                continue
            decrease, threshold = found
            assert abs(decrease - expected[0]) < 1e-12
            assert threshold == expected[1]

    def test_constant_feature_returns_none(self):
        assert best_gini_split(np.ones(5), np.array([0, 1, 0, 1, 0])) is None

    def test_depth1_tree_threshold_matches_oracle(self):
        rng = np.random.default_rng(35)
        for _ in range(200):
            n = int(rng.integers(4, 30))
            x = rng.normal(size=n)
            y = rng.integers(0, 2, size=n)
            if len(np.unique(y)) < 2:
                continue
            tree = grow_tree(x[:, None], y, np.random.default_rng(0),
                             max_depth=1, n_candidates=1,
                             importances=np.zeros(1))
            expected = gini_oracle(x, y)
            assert tree["t"] == expected[1]


class TestForest:
    def separable(self, seed=14, n=100):
        rng = np.random.default_rng(seed)
        X = np.vstack([rng.normal([-1.5, 0], 0.5, (n // 2, 2)),
                       rng.normal([1.5, 0], 0.5, (n // 2, 2))])
        y = np.repeat([0, 1], n // 2)
        return Dataset(X, y, ["a", "b"])

    def test_consistent_data_training_f1_is_one(self):
        ds = self.separable()
        artifact = train_random_forest(ds, ForestParams(n_trees=100,
                                                        seed=1))
        _, labels = predict(artifact, ds.rows)
        np.testing.assert_array_equal(labels, ds.labels)

    def test_scores_are_vote_multiples(self):
        ds = self.separable(seed=15)
        artifact = train_random_forest(ds, ForestParams(n_trees=4, seed=2))
        scores, _ = predict(artifact, ds.rows)
        np.testing.assert_allclose(scores * 4, np.round(scores * 4),
                                   atol=1e-12)

    def test_tied_vote_predicts_botnet(self):
        artifact = ModelArtifact(
            family="rf", hyperparams={"n_trees": 2},
            feature_names=["a"], standardization=None,
            parameters={"trees": [{"leaf": 1}, {"leaf": 0}],
                        "feature_importances": [1.0]})
        scores, labels = predict(artifact, np.zeros((3, 1)))
        np.testing.assert_array_equal(scores, 0.5)
        np.testing.assert_array_equal(labels, 1)

    def test_importances_rank_signal_above_noise(self):
        wins = 0
        for seed in range(10):
            rng = np.random.default_rng(100 + seed)
            y = rng.integers(0, 2, size=120)
            X = np.column_stack([y.astype(float),
                                 rng.normal(size=(120, 3))])
            ds = Dataset(X, y, ["copy", "noise1", "noise2", "noise3"])
            artifact = train_random_forest(ds, ForestParams(n_trees=30,
                                                            seed=seed))
            imp = np.array(artifact.parameters["feature_importances"])
            assert abs(imp.sum() - 1.0) < 1e-9
            if imp[0] > imp[1:].max():
                wins += 1
        assert wins > 5

    def test_monotone_transform_leaves_tree_predictions_unchanged(self):
        # splits sit on order statistics, so any strictly increasing
        # per-feature transform reroutes no row the tree was grown on
        # (rows a tree never saw can land on either side of a midpoint,
        # which is why this holds per tree, not per bootstrapped forest)
        for seed in range(10):
            rng = np.random.default_rng(200 + seed)
            X = rng.normal(size=(60, 3))
            y = (X[:, 0] + 0.5 * X[:, 1] > 0).astype(int)
            transformed = np.column_stack([np.exp(X[:, 0]),
                                           X[:, 1] ** 3,
                                           np.arctan(X[:, 2])])
            base = grow_tree(X, y, np.random.default_rng(seed), None, 2,
                             np.zeros(3))
            lifted = grow_tree(transformed, y, np.random.default_rng(seed),
                               None, 2, np.zeros(3))
            np.testing.assert_array_equal(tree_predict(base, X),
                                          tree_predict(lifted, transformed))

    def test_thread_count_does_not_change_the_artifact(self):
        ds = self.separable(seed=16)
        hp = ForestParams(n_trees=12, seed=3)
        solo = train_random_forest(ds, hp, n_threads=1)
        pooled = train_random_forest(ds, hp, n_threads=4)
        assert solo.to_json() == pooled.to_json()

    def test_artifact_round_trip(self, tmp_path):
        ds = self.separable(seed=17)
        artifact = train_random_forest(ds, ForestParams(n_trees=5, seed=4))
        path = tmp_path / "rf.json"
        artifact.save(path)
        loaded = load_artifact(path)
        np.testing.assert_array_equal(score_forest(loaded, ds.rows),
                                      score_forest(artifact, ds.rows))

    def test_empty_dataset_errors(self):
        ds = Dataset(np.zeros((0, 2)), np.zeros(0, dtype=int), ["a", "b"])
        with pytest.raises(ValueError):
            train_random_forest(ds, ForestParams(n_trees=1))

    def test_param_validation(self):
        with pytest.raises(ValueError):
            ForestParams(n_trees=0)
        with pytest.raises(ValueError):
            ForestParams(max_depth=0)

    def test_max_depth_caps_the_tree(self):
        ds = self.separable(seed=18)
        artifact = train_random_forest(ds, ForestParams(n_trees=3, seed=5,
                                                        max_depth=1))

        def depth(node):
            if "leaf" in node:
                return 0
            return 1 + max(depth(node["l"]), depth(node["r"]))

        assert all(depth(t) <= 1 for t in artifact.parameters["trees"])


def step_data(n=40):
    rng = np.random.default_rng(55)
    x = np.concatenate([rng.uniform(-2, -0.5, n // 2),
                        rng.uniform(0.5, 2, n // 2)])
    y = (x > 0).astype(int)
    return Dataset(x[:, None], y, ["x"]), x


class TestBoosting:
    def test_sse_split_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(66)
        for _ in range(100):
            n = int(rng.integers(2, 40))
            x = np.round(rng.normal(size=n), 1)
            t = rng.normal(size=n)
            found = best_sse_split(x, t)
            expected = sse_oracle(x, t)
            if expected is None:
                assert found is None
                continue
            assert abs(found[0] - expected[0]) < 1e-9
            assert found[1] == expected[1]

    @pytest.mark.parametrize("loss", ["deviance", "exponential"])
    def test_one_stage_stump_matches_closed_form(self, loss):
        # balanced step data, one depth-1 stage at learning rate 1:
        # both losses reduce to a single Newton leaf of +-1 on the
        # half-spaces (x2 for the deviance scale), so scores = sigma(+-2)
        ds, x = step_data()
        artifact = train_boosting(ds, BoostingParams(
            loss=loss, n_trees=1, max_depth=1, learning_rate=1.0))
        scores, labels = predict(artifact, ds.rows)
        expected = np.where(x > 0, SIGMOID_2, SIGMOID_M2)
        np.testing.assert_allclose(scores, expected, atol=1e-12)
        np.testing.assert_array_equal(labels, ds.labels)

    @pytest.mark.parametrize("loss", ["deviance", "exponential"])
    def test_stage_losses_non_increasing(self, loss):
        rng = np.random.default_rng(77)
        X = rng.normal(size=(150, 4))
        logit = X[:, 0] - 0.5 * X[:, 1] + 0.3 * rng.normal(size=150)
        y = (logit > 0).astype(int)
        ds = Dataset(X, y, ["a", "b", "c", "d"])
        artifact = train_boosting(ds, BoostingParams(loss=loss, n_trees=30,
                                                     max_depth=2))
        losses = artifact.metadata["stage_losses"]
        assert len(losses) == 31
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))

    @pytest.mark.parametrize("loss", ["deviance", "exponential"])
    def test_xor_reaches_perfect_training_fit(self, loss):
        X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
        y = np.array([0, 1, 1, 0])
        ds = Dataset(X, y, ["a", "b"])
        artifact = train_boosting(ds, BoostingParams(loss=loss, n_trees=50,
                                                     max_depth=2))
        _, labels = predict(artifact, X)
        # exhaustive truth table
        np.testing.assert_array_equal(labels, y)

    def test_regression_tree_fits_targets_at_depth(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        targets = np.array([5.0, 5.0, -1.0, -1.0])
        tree = grow_regression_tree(
            X, targets, max_depth=2,
            leaf_value=lambda idx: float(targets[idx].mean()))
        np.testing.assert_allclose(tree_value(tree, X), targets, atol=1e-12)

    def test_single_class_errors(self):
        ds = Dataset(np.arange(8.0).reshape(4, 2), np.zeros(4, dtype=int),
                     ["a", "b"])
        with pytest.raises(ValueError, match="both classes"):
            train_boosting(ds, BoostingParams())

    def test_param_validation(self):
        with pytest.raises(ValueError):
            BoostingParams(loss="hinge")
        with pytest.raises(ValueError):
            BoostingParams(n_trees=0)
        with pytest.raises(ValueError):
            BoostingParams(max_depth=0)
        with pytest.raises(ValueError):
            BoostingParams(learning_rate=0.0)

    def test_training_is_deterministic(self):
        ds, _ = step_data()
        hp = BoostingParams(n_trees=10, max_depth=2)
        assert (train_boosting(ds, hp).to_json()
                == train_boosting(ds, hp).to_json())

    def test_artifact_round_trip(self, tmp_path):
        ds, _ = step_data()
        artifact = train_boosting(ds, BoostingParams(n_trees=5))
        path = tmp_path / "gboost.json"
        artifact.save(path)
        loaded = load_artifact(path)
        np.testing.assert_array_equal(score_boosting(loaded, ds.rows),
                                      score_boosting(artifact, ds.rows))

    def test_monotone_transform_leaves_train_scores_unchanged(self):
        # boosting fits every stage on the full training set, so the
        # invariance extends to the whole ensemble's training scores
        rng = np.random.default_rng(88)
        X = rng.normal(size=(90, 3))
        y = (X[:, 0] - X[:, 2] > 0).astype(int)
        hp = BoostingParams(n_trees=15, max_depth=2)
        base = train_boosting(Dataset(X, y, ["a", "b", "c"]), hp)
        transformed = np.column_stack([np.exp(X[:, 0]), X[:, 1] ** 3,
                                       np.arctan(X[:, 2])])
        lifted = train_boosting(Dataset(transformed, y, ["a", "b", "c"]),
                                hp)
        np.testing.assert_array_equal(score_boosting(base, X),
                                      score_boosting(lifted, transformed))
