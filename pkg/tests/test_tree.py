import json

import numpy as np
import pytest

from carelens.errors import EmptyMatrix
from carelens.sensors import FeatureMatrix
from carelens.tree import TreeModel, fit_tree_arrays, train_tree

from oracles import random_tree


def matrix(rows, labels):
    names = [f"f{i}" for i in range(len(rows[0]))]
    return FeatureMatrix("p01", names, [list(r) for r in rows], list(labels))


def test_single_class_yields_single_leaf():
    model = train_tree(matrix([[0.1], [0.5], [0.9]], [1, 1, 1]))
    assert len(model.nodes) == 1
    assert model.nodes[0]["value"] == [0.0, 1.0]


def test_xor_separated_at_depth_two():
    rows = [[0, 0], [0, 1], [1, 0], [1, 1]]
    labels = [0, 1, 1, 0]
    model = train_tree(matrix(rows, labels), {"max_depth": 2})
    pred = [model.predict_class(r) for r in rows]
    assert pred == labels


def test_midpoint_threshold_on_step_data():
    model = train_tree(matrix([[1], [2], [3], [4]], [0, 0, 1, 1]))
    root = model.nodes[0]
    assert root["feature_index"] == 0
    assert root["threshold"] == 2.5


def test_thresholds_are_midpoints_of_observed_values():
    rng = np.random.default_rng(2)
    X = rng.random((60, 3))
    y = (X[:, 0] + X[:, 1] > 1.0).astype(int)
    model = fit_tree_arrays(X, y, max_depth=4)

    def check(idx, rows):
        node = model.nodes[idx]
        if "value" in node:
            return
        values = np.unique(X[rows, node["feature_index"]])
        midpoints = (values[:-1] + values[1:]) / 2.0
        assert np.isclose(midpoints, node["threshold"]).any()
        mask = X[rows, node["feature_index"]] <= node["threshold"]
        check(node["left"], rows[mask])
        check(node["right"], rows[~mask])

    check(0, np.arange(60))


def test_tie_break_prefers_lowest_feature_index():
    # both features split the data identically; feature 0 must win
    rows = [[0, 0], [0, 0], [1, 1], [1, 1]]
    model = train_tree(matrix(rows, [0, 0, 1, 1]))
    assert model.nodes[0]["feature_index"] == 0


def test_same_leaf_same_output():
    rng = np.random.default_rng(9)
    model = random_tree(rng, 3, 3)
    for _ in range(200):
        a = rng.random(3)
        b = rng.random(3)
        if model.leaf_index(a) == model.leaf_index(b):
            assert model.predict_output(a) == model.predict_output(b)


def test_batch_prediction_matches_scalar():
    rng = np.random.default_rng(4)
    model = random_tree(rng, 4, 3)
    X = rng.random((50, 4))
    batch = model.predict_output_batch(X)
    scalar = [model.predict_output(row) for row in X]
    np.testing.assert_allclose(batch, scalar)


def test_training_is_deterministic():
    rng = np.random.default_rng(21)
    X = rng.random((40, 4))
    y = (X[:, 2] > 0.6).astype(int)
    a = fit_tree_arrays(X, y, max_depth=3)
    b = fit_tree_arrays(X, y, max_depth=3)
    assert json.dumps(a.to_dict(), sort_keys=True) == json.dumps(b.to_dict(), sort_keys=True)


def test_regression_tree_reduces_variance():
    X = np.asarray([[0.0], [0.25], [0.6], [1.0]])
    y = np.asarray([0.0, 0.1, 0.9, 1.0])
    model = fit_tree_arrays(X, y, max_depth=1, task="regress")
    left = model.nodes[model.nodes[0]["left"]]["value"]
    right = model.nodes[model.nodes[0]["right"]]["value"]
    assert left == pytest.approx(0.05)
    assert right == pytest.approx(0.95)


def test_min_samples_leaf_respected():
    rng = np.random.default_rng(8)
    X = rng.random((30, 2))
    y = (X[:, 0] > 0.5).astype(int)
    model = fit_tree_arrays(X, y, max_depth=5, min_samples_leaf=5)
    counts = _leaf_counts(model, X)
    assert min(counts.values()) >= 5


def _leaf_counts(model: TreeModel, X):
    counts = {}
    for row in X:
        leaf = model.leaf_index(row)
        counts[leaf] = counts.get(leaf, 0) + 1
    return counts


def test_empty_matrix_rejected():
    with pytest.raises(EmptyMatrix):
        train_tree(matrix([[1.0]], [None]))


def test_serialization_round_trip():
    model = train_tree(matrix([[1], [2], [3], [4]], [0, 0, 1, 1]))
    again = TreeModel.from_dict(model.to_dict())
    assert again.nodes == model.nodes
    assert again.predict_output([2.0]) == model.predict_output([2.0])


def test_leaf_probabilities_sum_to_one():
    rng = np.random.default_rng(30)
    X = rng.random((80, 3))
    y = rng.integers(0, 2, 80)
    model = fit_tree_arrays(X, y, max_depth=4)
    for node in model.nodes:
        if "value" in node:
            assert sum(node["value"]) == pytest.approx(1.0, abs=1e-9)
