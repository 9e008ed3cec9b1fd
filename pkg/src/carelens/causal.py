"""Score-based causal structure discovery.

Greedy hill climbing over single-edge additions, removals and reversals,
scoring candidate graphs with a decomposable linear-Gaussian BIC. Acyclicity
is enforced at every step, the candidate order is canonical so runs are
deterministic, and the per-step score trace is monotone non-decreasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import TooFewRows, TooManyNodes

MAX_NODES_DEFAULT = 12
MIN_ROWS = 20
MIN_DELTA = 1e-9
VAR_FLOOR = 1e-12


@dataclass
class CausalGraph:
    nodes: list[str]
    edges: list[tuple[str, str, float]]  # (from, to, score_gain)
    total_score: float
    score_trace: list[float] = field(default_factory=list)

    def skeleton(self) -> set[frozenset]:
        return {frozenset((u, v)) for u, v, _ in self.edges}

    def is_acyclic(self) -> bool:
        return not _has_cycle({(u, v) for u, v, _ in self.edges})

    def to_dict(self) -> dict:
        return {
            "kind": "causal",
            "nodes": self.nodes,
            "edges": [{"from": u, "to": v, "score_gain": g} for u, v, g in self.edges],
            "total_score": self.total_score,
            "score_trace": self.score_trace,
        }


def _has_cycle(edges: set[tuple[str, str]]) -> bool:
    adj: dict[str, list[str]] = {}
    for u, v in edges:
        adj.setdefault(u, []).append(v)
    seen: dict[str, int] = {}  # 1 = visiting, 2 = done

    def visit(u: str) -> bool:
        state = seen.get(u)
        if state == 1:
            return True
        if state == 2:
            return False
        seen[u] = 1
        for w in adj.get(u, ()):
            if visit(w):
                return True
        seen[u] = 2
        return False

    return any(visit(u) for u in list(adj))


class _BicScorer:
    """Decomposable linear-Gaussian BIC with memoized local scores."""

    def __init__(self, data: np.ndarray):
        self.data = data
        self.n = data.shape[0]
        self._cache: dict[tuple[int, tuple[int, ...]], float] = {}

    def local(self, node: int, parents: tuple[int, ...]) -> float:
        key = (node, parents)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        y = self.data[:, node]
        if parents:
            X = np.column_stack([self.data[:, list(parents)], np.ones(self.n)])
            coef, *_ = np.linalg.lstsq(X, y, rcond=None)
            resid = y - X @ coef
        else:
            resid = y - y.mean()
        var = max(float((resid**2).mean()), VAR_FLOOR)
        loglik = -0.5 * self.n * (math.log(2.0 * math.pi * var) + 1.0)
        k = len(parents) + 2  # coefficients + intercept + variance
        score = loglik - 0.5 * k * math.log(self.n)
        self._cache[key] = score
        return score


def causal_discover(
    matrix,
    max_nodes: int = MAX_NODES_DEFAULT,
    include_label: bool = True,
    label_node: str = "label",
) -> CausalGraph:
    """Hill-climb a DAG over the matrix columns (plus the label node).

    Callers should pre-select a small column set (e.g. top features by
    attribution magnitude); the search is quadratic in nodes per step.
    """
    names = list(matrix.feature_names)
    data = matrix.as_array()
    if include_label and any(l is not None for l in matrix.labels):
        rows = [i for i, l in enumerate(matrix.labels) if l is not None]
        data = np.column_stack(
            [data[rows], np.asarray([float(matrix.labels[i]) for i in rows])]
        )
        names = names + [label_node]
    if len(names) > max_nodes:
        raise TooManyNodes(f"{len(names)} nodes exceeds max_nodes={max_nodes}")
    if data.shape[0] < MIN_ROWS:
        raise TooFewRows(f"{data.shape[0]} rows < {MIN_ROWS}")

    return _hill_climb(data, names)


def discover_from_arrays(data: np.ndarray, names: Sequence[str]) -> CausalGraph:
    data = np.asarray(data, dtype=float)
    if len(names) > MAX_NODES_DEFAULT:
        raise TooManyNodes(f"{len(names)} nodes")
    if data.shape[0] < MIN_ROWS:
        raise TooFewRows(f"{data.shape[0]} rows < {MIN_ROWS}")
    return _hill_climb(data, list(names))


def _hill_climb(data: np.ndarray, names: list[str]) -> CausalGraph:
    scorer = _BicScorer(data)
    m = len(names)
    parents: dict[int, set[int]] = {i: set() for i in range(m)}

    def total() -> float:
        return sum(scorer.local(i, tuple(sorted(parents[i]))) for i in range(m))

    def delta_add(u: int, v: int) -> float:
        old = tuple(sorted(parents[v]))
        new = tuple(sorted(parents[v] | {u}))
        return scorer.local(v, new) - scorer.local(v, old)

    def delta_remove(u: int, v: int) -> float:
        old = tuple(sorted(parents[v]))
        new = tuple(sorted(parents[v] - {u}))
        return scorer.local(v, new) - scorer.local(v, old)

    def edges() -> set[tuple[int, int]]:
        return {(u, v) for v, ps in parents.items() for u in ps}

    score = total()
    trace = [score]
    for _ in range(200):
        best_op: Optional[tuple] = None
        best_delta = MIN_DELTA
        current = edges()
        # canonical candidate order keeps ties deterministic
        for u in range(m):
            for v in range(m):
                if u == v:
                    continue
                if (u, v) not in current:
                    if (v, u) in current:
                        continue
                    if _has_cycle(current | {(u, v)}):
                        continue
                    d = delta_add(u, v)
                    if d > best_delta:
                        best_delta, best_op = d, ("add", u, v)
                else:
                    d = delta_remove(u, v)
                    if d > best_delta:
                        best_delta, best_op = d, ("remove", u, v)
                    flipped = (current - {(u, v)}) | {(v, u)}
                    if not _has_cycle(flipped):
                        d = delta_remove(u, v) + delta_add(v, u)
                        if d > best_delta:
                            best_delta, best_op = d, ("reverse", u, v)
        if best_op is None:
            break
        op, u, v = best_op
        if op == "add":
            parents[v].add(u)
        elif op == "remove":
            parents[v].discard(u)
        else:
            parents[v].discard(u)
            parents[u].add(v)
        score += best_delta
        trace.append(score)

    final_edges = []
    for v in range(m):
        for u in sorted(parents[v]):
            gain = -delta_remove(u, v)  # removal would lower the score by this
            final_edges.append((names[u], names[v], float(gain)))
    final_edges.sort()
    return CausalGraph(
        nodes=list(names),
        edges=final_edges,
        total_score=float(total()),
        score_trace=trace,
    )
