"""Axis-aligned decision trees (classification and regression).

Greedy CART construction with deterministic tie-breaking: candidate
thresholds sit at midpoints between consecutive sorted unique values, and
gain ties resolve to the lowest feature index, then the lowest threshold.
Routing convention is `x[feature] <= threshold` goes left.

Nodes are stored as a flat array of dicts so models serialize directly:
internal nodes `{feature_index, threshold, left, right}`, leaves `{value}`
where value is a class-probability vector (classification) or a scalar
(regression).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyMatrix

GAIN_EPS = 1e-12


@dataclass
class TreeModel:
    task: str  # "classify" | "regress"
    nodes: list[dict]
    max_depth: int
    training_params: dict = field(default_factory=dict)

    # --- structure ---

    def is_leaf(self, idx: int) -> bool:
        return "value" in self.nodes[idx]

    def validate(self) -> None:
        for i, node in enumerate(self.nodes):
            if "value" in node:
                if self.task == "classify":
                    s = sum(node["value"])
                    if abs(s - 1.0) > 1e-9:
                        raise ValueError(f"leaf {i} probabilities sum to {s}")
            else:
                if not math.isfinite(node["threshold"]):
                    raise ValueError(f"node {i} threshold not finite")
                for side in ("left", "right"):
                    if not 0 <= node[side] < len(self.nodes):
                        raise ValueError(f"node {i} missing child {side}")

    def leaf_index(self, x: Sequence[float]) -> int:
        idx = 0
        node = self.nodes[0]
        while "value" not in node:
            idx = node["left"] if x[node["feature_index"]] <= node["threshold"] else node["right"]
            node = self.nodes[idx]
        return idx

    def leaf_output(self, idx: int) -> float:
        value = self.nodes[idx]["value"]
        return float(value[1]) if self.task == "classify" else float(value)

    def leaf_class(self, idx: int) -> int:
        value = self.nodes[idx]["value"]
        return int(np.argmax(value))  # tie -> lower class index

    # --- prediction ---

    def predict_output(self, x: Sequence[float]) -> float:
        """Probability of the positive class, or the regression value."""
        return self.leaf_output(self.leaf_index(x))

    def predict_class(self, x: Sequence[float]) -> int:
        return self.leaf_class(self.leaf_index(x))

    def predict_output_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.empty(X.shape[0], dtype=float)
        stack = [(0, np.arange(X.shape[0]))]
        while stack:
            idx, rows = stack.pop()
            if rows.size == 0:
                continue
            node = self.nodes[idx]
            if "value" in node:
                out[rows] = self.leaf_output(idx)
                continue
            mask = X[rows, node["feature_index"]] <= node["threshold"]
            stack.append((node["left"], rows[mask]))
            stack.append((node["right"], rows[~mask]))
        return out

    def used_features(self) -> set[int]:
        return {n["feature_index"] for n in self.nodes if "value" not in n}

    def leaf_paths(self) -> list[tuple[int, list[tuple[int, str, float]]]]:
        """Every leaf with its root path constraints (feature, '<=' or '>', thr)."""
        paths = []

        def walk(idx: int, constraints: list):
            node = self.nodes[idx]
            if "value" in node:
                paths.append((idx, list(constraints)))
                return
            f, t = node["feature_index"], node["threshold"]
            walk(node["left"], constraints + [(f, "<=", t)])
            walk(node["right"], constraints + [(f, ">", t)])

        walk(0, [])
        return paths

    # --- serialization ---

    def to_dict(self) -> dict:
        return {
            "kind": "tree",
            "task": self.task,
            "nodes": self.nodes,
            "max_depth": self.max_depth,
            "training_params": self.training_params,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeModel":
        return cls(
            task=d["task"],
            nodes=[dict(n) for n in d["nodes"]],
            max_depth=int(d["max_depth"]),
            training_params=dict(d.get("training_params", {})),
        )


def _gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - (p * p).sum())


def _leaf_value(y: np.ndarray, task: str, n_classes: int):
    if task == "regress":
        return float(y.mean())
    counts = np.bincount(y.astype(int), minlength=n_classes)
    return [float(c) / len(y) for c in counts]


def _best_split(
    X: np.ndarray, y: np.ndarray, task: str, min_samples_leaf: int, n_classes: int
) -> Optional[tuple[int, float]]:
    """Best (feature, threshold) by impurity decrease; None if nothing valid.

    Zero-gain splits are allowed (the node may still become separable deeper
    down, as in parity-style data); ties keep the lowest feature index, then
    the lowest threshold.
    """
    n = len(y)
    best: Optional[tuple[int, float]] = None
    best_gain = -math.inf
    if task == "classify":
        parent = _gini(np.bincount(y.astype(int), minlength=n_classes)) * n
    else:
        parent = float(((y - y.mean()) ** 2).sum())

    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        xs, ys = X[order, f], y[order]
        uniq = np.unique(xs)
        if uniq.size < 2:
            continue
        thresholds = (uniq[:-1] + uniq[1:]) / 2.0
        for thr in thresholds:
            left = xs <= thr
            nl = int(left.sum())
            nr = n - nl
            if nl < min_samples_leaf or nr < min_samples_leaf:
                continue
            if task == "classify":
                cl = np.bincount(ys[left].astype(int), minlength=n_classes)
                cr = np.bincount(ys[~left].astype(int), minlength=n_classes)
                child = _gini(cl) * nl + _gini(cr) * nr
            else:
                yl, yr = ys[left], ys[~left]
                child = float(((yl - yl.mean()) ** 2).sum() + ((yr - yr.mean()) ** 2).sum())
            gain = parent - child
            if gain > best_gain + GAIN_EPS:
                best_gain = gain
                best = (f, float(thr))
    return best


def fit_tree_arrays(
    X: np.ndarray,
    y: np.ndarray,
    max_depth: int = 3,
    min_samples_leaf: int = 1,
    task: str = "classify",
    n_classes: int = 2,
) -> TreeModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float if task == "regress" else int)
    if X.shape[0] == 0:
        raise EmptyMatrix("no rows to fit")

    nodes: list[dict] = []

    def build(rows: np.ndarray, depth: int) -> int:
        ys = y[rows]
        pure = (ys == ys[0]).all()
        idx = len(nodes)
        nodes.append({})
        split = None
        if depth < max_depth and not pure and rows.size >= 2 * min_samples_leaf:
            split = _best_split(X[rows], ys, task, min_samples_leaf, n_classes)
        if split is None:
            nodes[idx] = {"value": _leaf_value(ys, task, n_classes)}
            return idx
        f, thr = split
        mask = X[rows, f] <= thr
        nodes[idx] = {"feature_index": f, "threshold": thr, "left": -1, "right": -1}
        nodes[idx]["left"] = build(rows[mask], depth + 1)
        nodes[idx]["right"] = build(rows[~mask], depth + 1)
        return idx

    build(np.arange(X.shape[0]), 0)
    model = TreeModel(
        task=task,
        nodes=nodes,
        max_depth=max_depth,
        training_params={"min_samples_leaf": min_samples_leaf, "n_classes": n_classes},
    )
    model.validate()
    return model


def train_tree(matrix, params: Optional[dict] = None) -> TreeModel:
    """Fit a tree on a labeled FeatureMatrix.

    params: max_depth (default 3), min_samples_leaf (default 1),
    task "classify" (default) or "regress".
    """
    params = dict(params or {})
    task = params.get("task", "classify")
    rows = [(r, l) for r, l in zip(matrix.rows, matrix.labels) if l is not None]
    if not rows:
        raise EmptyMatrix(matrix.participant_id)
    X = np.asarray([r for r, _ in rows], dtype=float)
    y = np.asarray([l for _, l in rows])
    return fit_tree_arrays(
        X,
        y,
        max_depth=params.get("max_depth", 3),
        min_samples_leaf=params.get("min_samples_leaf", 1),
        task=task,
    )
