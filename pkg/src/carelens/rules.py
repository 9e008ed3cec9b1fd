"""Precision-filtered rule extraction from ensembles of shallow trees.

Bootstrap-sampled trees are mined for root-to-positive-leaf paths; each path
becomes a conjunctive rule whose precision and recall are measured on that
tree's out-of-bag rows. Rules failing the precision/recall floors are
discarded, semantically identical boxes are deduplicated keeping the best
copy, and survivors are sorted by (precision, recall) descending.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import SingleClass
from .tree import fit_tree_arrays


@dataclass(frozen=True)
class Rule:
    """Conjunction of (feature, op, threshold) tests predicting the positive class."""

    conjuncts: tuple[tuple[str, str, float], ...]  # op in {"<=", ">"}
    precision: float
    recall: float
    support: int  # matched rows on the evaluation split
    eval_rows: tuple[int, ...]  # row indices of the out-of-bag evaluation split

    def matches(self, x: Sequence[float], feature_names: Sequence[str]) -> bool:
        idx = {n: i for i, n in enumerate(feature_names)}
        for feat, op, thr in self.conjuncts:
            v = x[idx[feat]]
            if op == "<=" and not v <= thr:
                return False
            if op == ">" and not v > thr:
                return False
        return True

    def matches_batch(self, X: np.ndarray, feature_names: Sequence[str]) -> np.ndarray:
        idx = {n: i for i, n in enumerate(feature_names)}
        mask = np.ones(X.shape[0], dtype=bool)
        for feat, op, thr in self.conjuncts:
            col = X[:, idx[feat]]
            mask &= (col <= thr) if op == "<=" else (col > thr)
        return mask

    def describe(self) -> str:
        return " and ".join(f"{feat} {op} {thr:.6g}" for feat, op, thr in self.conjuncts)

    def to_dict(self) -> dict:
        return {
            "conjuncts": [list(c) for c in self.conjuncts],
            "precision": self.precision,
            "recall": self.recall,
            "support": self.support,
            "eval_rows": list(self.eval_rows),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Rule":
        return cls(
            conjuncts=tuple((c[0], c[1], float(c[2])) for c in d["conjuncts"]),
            precision=float(d["precision"]),
            recall=float(d["recall"]),
            support=int(d["support"]),
            eval_rows=tuple(int(i) for i in d["eval_rows"]),
        )


def _box_from_path(
    path: list[tuple[int, str, float]], feature_names: Sequence[str]
) -> tuple[tuple[str, str, float], ...]:
    """Collapse path constraints to the tightest bounds per feature."""
    lower: dict[int, float] = {}
    upper: dict[int, float] = {}
    for f, op, thr in path:
        if op == ">":
            lower[f] = max(lower.get(f, -math.inf), thr)
        else:
            upper[f] = min(upper.get(f, math.inf), thr)
    conjuncts = []
    for f in sorted(set(lower) | set(upper)):
        if f in lower:
            conjuncts.append((feature_names[f], ">", lower[f]))
        if f in upper:
            conjuncts.append((feature_names[f], "<=", upper[f]))
    return tuple(conjuncts)


def rule_metrics(
    conjuncts_or_rule,
    X: np.ndarray,
    y: np.ndarray,
    rows: Sequence[int],
    feature_names: Sequence[str],
) -> tuple[float, float, int]:
    """(precision, recall, support) of a rule on the given row subset.

    Undefined ratios (no matches, or no positives in the split) map to 0.
    """
    rule = conjuncts_or_rule
    conjuncts = rule.conjuncts if isinstance(rule, Rule) else rule
    probe = Rule(tuple(conjuncts), 0.0, 0.0, 0, ())
    rows = np.asarray(rows, dtype=int)
    matched = probe.matches_batch(X[rows], feature_names)
    yy = y[rows]
    support = int(matched.sum())
    tp = int((matched & (yy == 1)).sum())
    positives = int((yy == 1).sum())
    precision = tp / support if support else 0.0
    recall = tp / positives if positives else 0.0
    return precision, recall, support


def extract_rules(
    matrix,
    params: Optional[dict] = None,
) -> list[Rule]:
    """Mine filtered conjunctive rules for the positive class.

    params: n_trees (default 25), max_depth (default 3), min_precision
    (default 0.9), min_recall (default 0.05), min_samples_leaf (default 2),
    seed (default 0).
    """
    params = dict(params or {})
    n_trees = params.get("n_trees", 25)
    max_depth = params.get("max_depth", 3)
    min_precision = params.get("min_precision", 0.9)
    min_recall = params.get("min_recall", 0.05)
    min_samples_leaf = params.get("min_samples_leaf", 2)
    seed = params.get("seed", 0)

    rows = [(r, l) for r, l in zip(matrix.rows, matrix.labels) if l is not None]
    X = np.asarray([r for r, _ in rows], dtype=float)
    y = np.asarray([l for _, l in rows], dtype=int)
    if len(set(y.tolist())) < 2:
        raise SingleClass(matrix.participant_id)
    names = matrix.feature_names
    n = len(y)

    rng = np.random.default_rng(seed)
    best_by_box: dict[tuple, Rule] = {}
    for _ in range(n_trees):
        sample = rng.integers(0, n, size=n)
        oob = tuple(sorted(set(range(n)) - set(sample.tolist())))
        if not oob:
            continue
        ys = y[sample]
        if (ys == ys[0]).all():
            continue
        tree = fit_tree_arrays(
            X[sample], ys, max_depth=max_depth,
            min_samples_leaf=min_samples_leaf, task="classify",
        )
        for leaf, path in tree.leaf_paths():
            value = tree.nodes[leaf]["value"]
            if not path or value[1] <= 0.5:
                continue
            box = _box_from_path(path, names)
            precision, recall, support = rule_metrics(box, X, y, oob, names)
            if precision < min_precision or recall < min_recall:
                continue
            candidate = Rule(box, precision, recall, support, oob)
            held = best_by_box.get(box)
            if held is None or (candidate.precision, candidate.recall) > (
                held.precision, held.recall
            ):
                best_by_box[box] = candidate

    return sorted(
        best_by_box.values(),
        key=lambda r: (-r.precision, -r.recall, r.describe()),
    )


class RulesModel:
    """Classifier built from an extracted rule list.

    An instance scores as the highest precision among the rules it matches
    (0 if none fire), so thresholding at 0.5 predicts positive iff some
    confident rule matches.
    """

    def __init__(self, rules: Sequence[Rule], feature_names: Sequence[str]):
        self.rules = list(rules)
        self.feature_names = list(feature_names)

    def predict_output(self, x: Sequence[float]) -> float:
        scores = [r.precision for r in self.rules if r.matches(x, self.feature_names)]
        return max(scores) if scores else 0.0

    def predict_output_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.zeros(X.shape[0], dtype=float)
        for r in self.rules:
            mask = r.matches_batch(X, self.feature_names)
            out[mask] = np.maximum(out[mask], r.precision)
        return out

    def to_dict(self) -> dict:
        return {
            "kind": "rules",
            "rules": [r.to_dict() for r in self.rules],
            "feature_names": self.feature_names,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RulesModel":
        return cls([Rule.from_dict(r) for r in d["rules"]], d["feature_names"])
