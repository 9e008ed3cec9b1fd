"""Exact interventional Shapley attributions for tree models.

For each feature subset S, v(S) is the mean model output over the background
rows with the features in S pinned to the explained instance. Attributions
are the exact Shapley sums over all subsets; v is memoized by subset bitmask
so each of the 2^n coalitions is evaluated once. Local accuracy
(base value + sum of contributions = model output) holds by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyBackground, TooManyFeatures

MAX_FEATURES = 20


@dataclass
class ShapAttribution:
    feature_names: list[str]
    base_value: float
    phi: dict[str, float]
    output: float

    def ranked(self) -> list[tuple[str, float]]:
        """Features by descending |contribution|, name order on ties."""
        return sorted(self.phi.items(), key=lambda kv: (-abs(kv[1]), kv[0]))

    def to_dict(self) -> dict:
        return {
            "kind": "shap",
            "feature_names": self.feature_names,
            "base_value": self.base_value,
            "phi": self.phi,
            "output": self.output,
        }


def _subset_weights(n: int) -> list[float]:
    # weight for a coalition of size s (excluding the explained feature)
    return [
        math.factorial(s) * math.factorial(n - s - 1) / math.factorial(n)
        for s in range(n)
    ]


def shap_explain(
    model,
    x: Sequence[float],
    background: np.ndarray,
    feature_names: Sequence[str],
) -> ShapAttribution:
    """Exact interventional Shapley values for one instance.

    `model` needs predict_output_batch; background rows supply the marginal
    distribution. Bounded to 20 features (2^n coalition enumeration).
    """
    x = np.asarray(x, dtype=float)
    background = np.asarray(background, dtype=float)
    n = x.shape[0]
    if n > MAX_FEATURES:
        raise TooManyFeatures(f"{n} features exceeds the exact bound {MAX_FEATURES}")
    if background.size == 0 or background.shape[0] == 0:
        raise EmptyBackground("background rows required")

    v = np.empty(1 << n, dtype=float)
    for mask in range(1 << n):
        rows = background.copy()
        for i in range(n):
            if mask >> i & 1:
                rows[:, i] = x[i]
        v[mask] = float(model.predict_output_batch(rows).mean())

    weights = _subset_weights(n)
    phi = np.zeros(n, dtype=float)
    for mask in range(1 << n):
        s = bin(mask).count("1")
        for i in range(n):
            if not mask >> i & 1:
                phi[i] += weights[s] * (v[mask | (1 << i)] - v[mask])

    return ShapAttribution(
        feature_names=list(feature_names),
        base_value=float(v[0]),
        phi={feature_names[i]: float(phi[i]) for i in range(n)},
        output=float(v[(1 << n) - 1]),
    )
