"""Synthetic cohort generator.

Stands in for the unavailable study cohort: draws per-participant feature
matrices in the canonical sensor vocabulary where intoxicated windows carry
elevated heart-rate and motion-change statistics, with a configurable class
imbalance (default 1 positive : 4 negative). Deterministic for a fixed seed.
"""

from __future__ import annotations

import numpy as np

from .sensors import FEATURE_NAMES, FeatureMatrix


def _window_features(rng: np.random.Generator, positive: bool) -> dict[str, float]:
    hr_mean = rng.normal(90.0, 5.0) if positive else rng.normal(72.0, 5.0)
    hr_spread = abs(rng.normal(14.0, 3.0)) if positive else abs(rng.normal(7.0, 2.0))
    axis_changes = rng.poisson(20.0) if positive else rng.poisson(5.0)
    mag_var = abs(rng.normal(2.0, 0.5)) if positive else abs(rng.normal(0.5, 0.2))
    noise_mean = rng.normal(58.0, 8.0) if positive else rng.normal(46.0, 8.0)
    step_sum = max(0.0, rng.normal(120.0, 60.0))
    batt_rate = abs(rng.normal(0.004, 0.001))

    f = {
        "hr_mean": hr_mean,
        "hr_median": hr_mean + rng.normal(0.0, 0.8),
        "hr_min": hr_mean - hr_spread,
        "hr_max": hr_mean + hr_spread,
        "hr_q1": hr_mean - 0.45 * hr_spread + rng.normal(0.0, 0.5),
        "hr_q3": hr_mean + 0.45 * hr_spread + rng.normal(0.0, 0.5),
        "hr_std": hr_spread * 0.55 + abs(rng.normal(0.0, 0.4)),
        "hr_excess_kurtosis": rng.normal(0.0, 0.6),
        "accel_axis_changes": float(axis_changes),
        "accel_mag_var": mag_var,
        "noise_mean": noise_mean,
        "noise_max": noise_mean + abs(rng.normal(9.0, 3.0)),
        # step statistics deliberately track step_sum so correlation pruning
        # trims them, mirroring typical redundancy in step aggregates
        "step_sum": step_sum,
        "step_median": 0.30 * step_sum * (1.0 + rng.normal(0.0, 0.02)),
        "step_max": 0.60 * step_sum * (1.0 + rng.normal(0.0, 0.02)),
        "step_q1": 0.15 * step_sum * (1.0 + rng.normal(0.0, 0.02)),
        "step_q3": 0.45 * step_sum * (1.0 + rng.normal(0.0, 0.02)),
        "battery_rate_mean": batt_rate,
        "battery_rate_std": batt_rate * 0.25 * (1.0 + rng.normal(0.0, 0.05)),
        "battery_rate_max": batt_rate * 1.80 * (1.0 + rng.normal(0.0, 0.05)),
        "battery_rate_min": batt_rate * 0.20 * (1.0 + rng.normal(0.0, 0.05)),
    }
    assert set(f) == set(FEATURE_NAMES)
    return f


def generate_synthetic_cohort(
    n_participants: int,
    windows_per_participant: int,
    seed: int,
    imbalance: tuple[int, int] = (1, 4),
    missing_rate: float = 0.0,
) -> dict[str, FeatureMatrix]:
    """Generate per-participant feature matrices, keyed by participant id.

    Labels cycle `pos` positives then `neg` negatives per imbalance cycle, so
    counts are exact (e.g. 1:4 over 100 windows -> 20 positives) and both
    classes appear in any chronological split.
    """
    if n_participants < 1 or windows_per_participant < 1:
        raise ValueError("counts must be >= 1")
    pos, neg = imbalance
    if pos < 1 or neg < 0:
        raise ValueError("imbalance must have >= 1 positive per cycle")

    names = sorted(FEATURE_NAMES)
    cohort: dict[str, FeatureMatrix] = {}
    for p in range(n_participants):
        rng = np.random.default_rng([seed, p])
        pid = f"p{p + 1:02d}"
        rows, labels = [], []
        for w in range(windows_per_participant):
            positive = (w % (pos + neg)) < pos
            feats = _window_features(rng, positive)
            row = [feats[n] for n in names]
            if missing_rate > 0.0:
                for i in range(len(row)):
                    if rng.random() < missing_rate:
                        row[i] = float("nan")
            rows.append(row)
            labels.append(1 if positive else 0)
        cohort[pid] = FeatureMatrix(
            participant_id=pid, feature_names=list(names), rows=rows, labels=labels
        )
    return cohort
