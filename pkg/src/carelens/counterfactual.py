"""Minimal-change counterfactuals for single decision trees.

Every leaf satisfying the target is turned into its feasible box (path
constraints intersected and clipped to the [0, 1] normalized range, with a
small interior offset on strict '>' sides); the instance is projected onto
each box per coordinate and the closest projection in L1 distance wins.
Ensembles are handled by explaining a surrogate tree fit to mimic them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .boosting import EnsembleModel
from .errors import ImmutableConflict, TargetUnreachable
from .tree import TreeModel, fit_tree_arrays

logger = logging.getLogger(__name__)

INTERIOR_EPS = 1e-6

# target is either a class index or a one-sided output bound
Target = Union[int, tuple[str, float]]  # (">=", v) or ("<=", v)


@dataclass
class Counterfactual:
    feature_names: list[str]
    original: list[float]
    modified: list[float]
    changed_features: dict[str, float]  # name -> delta (modified - original)
    distance: float
    achieved_output: float

    def to_dict(self) -> dict:
        return {
            "kind": "counterfactual",
            "feature_names": self.feature_names,
            "original": self.original,
            "modified": self.modified,
            "changed_features": self.changed_features,
            "distance": self.distance,
            "achieved_output": self.achieved_output,
        }


def _leaf_satisfies(model: TreeModel, leaf: int, target: Target) -> bool:
    if isinstance(target, int):
        return model.leaf_class(leaf) == target
    op, bound = target
    out = model.leaf_output(leaf)
    return out >= bound if op == ">=" else out <= bound


def _leaf_box(
    path: list[tuple[int, str, float]], n_features: int
) -> Optional[list[tuple[float, float]]]:
    """Feasible [low, high] per feature, interior-offset and clipped to [0,1]."""
    low = [0.0] * n_features
    high = [1.0] * n_features
    for f, op, thr in path:
        if op == "<=":
            high[f] = min(high[f], thr)
        else:
            low[f] = max(low[f], thr + INTERIOR_EPS)
    for f in range(n_features):
        high[f] = min(high[f], 1.0)
        low[f] = max(low[f], 0.0)
        if low[f] > high[f]:
            return None
    return list(zip(low, high))


def counterfactual_search(
    model: TreeModel,
    x: Sequence[float],
    target: Target,
    feature_names: Sequence[str],
    immutable: Sequence[str] = (),
) -> Counterfactual:
    """Smallest L1 change to `x` that makes the tree satisfy `target`.

    Ties break by fewest changed features, then by the changed feature-name
    tuple, then by the modified vector, so results are deterministic.
    Immutable features must keep their original values.
    """
    x = [float(v) for v in x]
    n = len(x)
    immutable_idx = {list(feature_names).index(name) for name in immutable}

    target_leaves = [
        (leaf, path)
        for leaf, path in model.leaf_paths()
        if _leaf_satisfies(model, leaf, target)
    ]
    if not target_leaves:
        raise TargetUnreachable(f"no leaf satisfies {target!r}")

    best = None
    best_key = None
    immutable_blocked = 0
    for leaf, path in target_leaves:
        box = _leaf_box(path, n)
        if box is None:
            continue
        candidate = list(x)
        ok = True
        for f, (low, high) in enumerate(box):
            if low <= x[f] <= high:
                continue
            if f in immutable_idx:
                ok = False
                break
            candidate[f] = min(max(x[f], low), high)
        if not ok:
            immutable_blocked += 1
            continue
        deltas = {
            feature_names[f]: candidate[f] - x[f]
            for f in range(n)
            if candidate[f] != x[f]
        }
        distance = sum(abs(d) for d in deltas.values())
        key = (distance, len(deltas), tuple(sorted(deltas)), tuple(candidate))
        if best_key is None or key < best_key:
            best_key = key
            best = Counterfactual(
                feature_names=list(feature_names),
                original=list(x),
                modified=candidate,
                changed_features=deltas,
                distance=distance,
                achieved_output=model.predict_output(candidate),
            )
    if best is None:
        if immutable_blocked:
            raise ImmutableConflict(
                "every target leaf requires changing an immutable feature"
            )
        raise TargetUnreachable(f"no feasible leaf box for {target!r}")
    return best


def surrogate_tree(
    ensemble: EnsembleModel, X: np.ndarray, max_depth: int = 4
) -> tuple[TreeModel, float]:
    """Regression tree mimicking an ensemble's probabilities.

    Returns (tree, fidelity) where fidelity is the agreement rate of the
    0.5-thresholded decisions on the supplied rows; fidelity is also logged
    so downstream explanations can be audited.
    """
    X = np.asarray(X, dtype=float)
    probs = ensemble.predict_output_batch(X)
    tree = fit_tree_arrays(X, probs, max_depth=max_depth, task="regress")
    agree = (tree.predict_output_batch(X) > 0.5) == (probs > 0.5)
    fidelity = float(agree.mean())
    logger.info("surrogate tree fidelity %.4f on %d rows", fidelity, X.shape[0])
    return tree, fidelity
