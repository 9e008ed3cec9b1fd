"""Gradient-boosted trees with logistic loss.

Regression trees are fit round by round to the residual gradient
(label minus predicted probability); leaf values are then rescaled by the
per-leaf Newton step, the standard update for logistic loss. A halving
backoff keeps training log-loss non-increasing even with aggressive
learning rates.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyMatrix
from .tree import TreeModel, fit_tree_arrays

logger = logging.getLogger(__name__)

PROB_CLIP = 1e-12


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.asarray(z, dtype=float)))


def log_loss(y: np.ndarray, p: np.ndarray) -> float:
    p = np.clip(p, PROB_CLIP, 1.0 - PROB_CLIP)
    return float(-(y * np.log(p) + (1 - y) * np.log(1 - p)).mean())


@dataclass
class EnsembleModel:
    trees: list[TreeModel]
    learning_rate: float
    base_score: float  # log-odds
    n_rounds: int
    training_log: list[float] = field(default_factory=list)  # per-round train log-loss

    def raw_score(self, x: Sequence[float]) -> float:
        return self.base_score + self.learning_rate * sum(
            t.predict_output(x) for t in self.trees
        )

    def predict_output(self, x: Sequence[float]) -> float:
        return float(sigmoid(self.raw_score(x)))

    def predict_class(self, x: Sequence[float]) -> int:
        return int(self.predict_output(x) > 0.5)

    def predict_output_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        raw = np.full(X.shape[0], self.base_score, dtype=float)
        for t in self.trees:
            raw += self.learning_rate * t.predict_output_batch(X)
        return sigmoid(raw)

    def used_features(self) -> set[int]:
        used: set[int] = set()
        for t in self.trees:
            used |= t.used_features()
        return used

    def to_dict(self) -> dict:
        return {
            "kind": "ensemble",
            "trees": [t.to_dict() for t in self.trees],
            "learning_rate": self.learning_rate,
            "base_score": self.base_score,
            "n_rounds": self.n_rounds,
            "training_log": self.training_log,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleModel":
        return cls(
            trees=[TreeModel.from_dict(t) for t in d["trees"]],
            learning_rate=float(d["learning_rate"]),
            base_score=float(d["base_score"]),
            n_rounds=int(d["n_rounds"]),
            training_log=list(d.get("training_log", [])),
        )


def _rescale_leaves(tree: TreeModel, X: np.ndarray, grad: np.ndarray, hess: np.ndarray) -> None:
    """Replace each leaf mean with the Newton step sum(grad)/sum(hess)."""
    leaf_of = np.asarray([tree.leaf_index(x) for x in X])
    for leaf in set(leaf_of.tolist()):
        rows = leaf_of == leaf
        denom = max(float(hess[rows].sum()), 1e-12)
        tree.nodes[leaf]["value"] = float(grad[rows].sum()) / denom


def fit_boosted_arrays(
    X: np.ndarray,
    y: np.ndarray,
    n_rounds: int = 20,
    learning_rate: float = 0.1,
    max_depth: int = 3,
    min_samples_leaf: int = 1,
) -> EnsembleModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[0] == 0:
        raise EmptyMatrix("no rows to fit")

    p_prior = min(max(float(y.mean()), 1e-6), 1.0 - 1e-6)
    base = math.log(p_prior / (1.0 - p_prior))
    model = EnsembleModel(
        trees=[], learning_rate=learning_rate, base_score=base, n_rounds=n_rounds
    )
    if len(set(y.tolist())) < 2:
        # constant-probability fallback rather than a hard failure
        logger.warning("single-class training data; boosted model is constant")
        model.training_log.append(log_loss(y, sigmoid(np.full(len(y), base))))
        return model

    raw = np.full(X.shape[0], base, dtype=float)
    loss = log_loss(y, sigmoid(raw))
    model.training_log.append(loss)
    for _ in range(n_rounds):
        p = sigmoid(raw)
        grad = y - p               # negative gradient of log-loss wrt raw score
        hess = p * (1.0 - p)
        tree = fit_tree_arrays(
            X, grad, max_depth=max_depth, min_samples_leaf=min_samples_leaf, task="regress"
        )
        _rescale_leaves(tree, X, grad, hess)
        step = tree.predict_output_batch(X)
        # halve the round's contribution until the loss stops increasing
        scale = 1.0
        for _ in range(40):
            new_loss = log_loss(y, sigmoid(raw + learning_rate * scale * step))
            if new_loss <= loss + 1e-12:
                break
            scale *= 0.5
        if scale != 1.0:
            for node in tree.nodes:
                if "value" in node:
                    node["value"] = float(node["value"]) * scale
            step = step * scale
        raw = raw + learning_rate * step
        loss = log_loss(y, sigmoid(raw))
        model.trees.append(tree)
        model.training_log.append(loss)
    return model


def train_boosted(matrix, params: Optional[dict] = None) -> EnsembleModel:
    """Fit logistic-loss boosting on a labeled FeatureMatrix.

    params: n_rounds (default 20), learning_rate (default 0.1),
    max_depth (default 3), min_samples_leaf (default 1). Single-class data
    falls back to a constant-probability model (logged via SingleClass
    handling inside) and never raises.
    """
    params = dict(params or {})
    rows = [(r, l) for r, l in zip(matrix.rows, matrix.labels) if l is not None]
    if not rows:
        raise EmptyMatrix(matrix.participant_id)
    X = np.asarray([r for r, _ in rows], dtype=float)
    y = np.asarray([l for _, l in rows], dtype=float)
    return fit_boosted_arrays(
        X,
        y,
        n_rounds=params.get("n_rounds", 20),
        learning_rate=params.get("learning_rate", 0.1),
        max_depth=params.get("max_depth", 3),
        min_samples_leaf=params.get("min_samples_leaf", 1),
    )
