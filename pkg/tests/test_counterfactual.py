import numpy as np
import pytest

from carelens.boosting import fit_boosted_arrays
from carelens.counterfactual import counterfactual_search, surrogate_tree
from carelens.errors import ImmutableConflict, TargetUnreachable
from carelens.tree import TreeModel

from oracles import exact_counterfactual, grid_counterfactual, random_tree


def names(n):
    return [f"f{i}" for i in range(n)]


def stump(thr=0.5):
    return TreeModel(
        task="classify",
        nodes=[
            {"feature_index": 0, "threshold": thr, "left": 1, "right": 2},
            {"value": [1.0, 0.0]},
            {"value": [0.0, 1.0]},
        ],
        max_depth=1,
    )


def test_instance_already_in_target_class():
    cf = counterfactual_search(stump(), [0.8], 1, names(1))
    assert cf.modified == [0.8]
    assert cf.distance == 0.0
    assert cf.changed_features == {}


def test_stump_projection_crosses_with_interior_offset():
    cf = counterfactual_search(stump(), [0.2], 1, names(1))
    assert cf.modified[0] == pytest.approx(0.5 + 1e-6, abs=1e-12)
    assert cf.distance == pytest.approx(0.3, abs=1e-5)
    assert cf.achieved_output == 1.0


def test_validity_and_grid_agreement_on_two_feature_trees():
    rng = np.random.default_rng(77)
    checked = 0
    while checked < 10:
        model = random_tree(rng, 2, 2)
        x = rng.random(2)
        target = 1 - int(model.predict_output(x) > 0.5)
        try:
            cf = counterfactual_search(model, x, target, names(2))
        except TargetUnreachable:
            continue
        assert model.predict_class(cf.modified) == target
        grid = grid_counterfactual(model, x, target, step=1e-3)
        assert grid is not None
        assert abs(cf.distance - grid) <= 2e-3
        checked += 1


def test_exact_oracle_agreement_on_three_feature_trees():
    rng = np.random.default_rng(78)
    checked = 0
    while checked < 10:
        model = random_tree(rng, 3, 3)
        x = rng.random(3)
        target = 1 - int(model.predict_output(x) > 0.5)
        try:
            cf = counterfactual_search(model, x, target, names(3))
        except TargetUnreachable:
            continue
        exact = exact_counterfactual(model, x, target)
        assert exact is not None
        assert cf.distance <= exact + 1e-9
        assert model.predict_class(cf.modified) == target
        checked += 1


def test_distance_is_l1_of_deltas():
    rng = np.random.default_rng(5)
    model = random_tree(rng, 3, 3)
    x = rng.random(3)
    target = 1 - int(model.predict_output(x) > 0.5)
    try:
        cf = counterfactual_search(model, x, target, names(3))
    except TargetUnreachable:
        pytest.skip("target class absent from this random tree")
    assert cf.distance == pytest.approx(sum(abs(d) for d in cf.changed_features.values()))


def test_immutable_conflict():
    with pytest.raises(ImmutableConflict):
        counterfactual_search(stump(), [0.2], 1, names(1), immutable=["f0"])


def test_immutable_feature_kept_when_alternative_exists():
    # positive leaves reachable through f0 or f1; f0 frozen forces the f1 route
    model = TreeModel(
        task="classify",
        nodes=[
            {"feature_index": 0, "threshold": 0.5, "left": 1, "right": 2},
            {"feature_index": 1, "threshold": 0.7, "left": 3, "right": 4},
            {"value": [0.0, 1.0]},
            {"value": [1.0, 0.0]},
            {"value": [0.0, 1.0]},
        ],
        max_depth=2,
    )
    cf = counterfactual_search(model, [0.2, 0.1], 1, names(2), immutable=["f0"])
    assert cf.modified[0] == 0.2
    assert cf.modified[1] == pytest.approx(0.7 + 1e-6)


def test_target_unreachable():
    model = TreeModel(task="classify", nodes=[{"value": [1.0, 0.0]}], max_depth=0)
    with pytest.raises(TargetUnreachable):
        counterfactual_search(model, [0.5], 1, names(1))


def test_threshold_targets_on_regression_trees():
    model = TreeModel(
        task="regress",
        nodes=[
            {"feature_index": 0, "threshold": 0.6, "left": 1, "right": 2},
            {"value": 0.2},
            {"value": 0.9},
        ],
        max_depth=1,
    )
    cf = counterfactual_search(model, [0.1], (">=", 0.5), names(1))
    assert cf.achieved_output == pytest.approx(0.9)
    assert cf.modified[0] == pytest.approx(0.6 + 1e-6)


def test_tie_breaks_prefer_fewer_changes():
    # two target leaves at equal distance; one needs a single change
    model = TreeModel(
        task="classify",
        nodes=[
            {"feature_index": 0, "threshold": 0.5, "left": 1, "right": 2},
            {"feature_index": 1, "threshold": 0.5, "left": 3, "right": 4},
            {"value": [0.0, 1.0]},
            {"value": [1.0, 0.0]},
            {"value": [0.0, 1.0]},
        ],
        max_depth=2,
    )
    cf = counterfactual_search(model, [0.5 - 1e-6 / 2, 0.5], 1, names(2))
    assert len(cf.changed_features) == 1


def test_surrogate_tree_mimics_ensemble(caplog):
    rng = np.random.default_rng(31)
    X = rng.random((80, 2))
    y = (X[:, 0] > 0.5).astype(float)
    ensemble = fit_boosted_arrays(X, y, n_rounds=10, learning_rate=0.3, max_depth=2)
    tree, fidelity = surrogate_tree(ensemble, X)
    assert fidelity >= 0.95
    cf = counterfactual_search(tree, [0.2, 0.4], (">=", 0.5), names(2))
    assert ensemble.predict_output(cf.modified) > 0.5
