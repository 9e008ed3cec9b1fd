"""Wearable/smartphone sensor ingestion and window feature pipeline.

Raw records are segmented into fixed 5-minute windows anchored at each
participant's earliest timestamp, reduced to per-stream statistics, labeled
from self-report intervals, and preprocessed (dedup, mean-impute, min-max
normalize, correlation pruning) into rectangular feature matrices ready for
model training.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import AllMissingColumn, EmptyMatrix, NonFiniteTimestamp, UnknownParticipant

WINDOW_SECONDS = 300.0
DEFAULT_CORR_THRESHOLD = 0.9

STREAMS = ("heart_rate", "step_count", "accelerometer", "battery", "noise", "gps")

LABEL_INTOXICATED = "intoxicated"
LABEL_NOT_INTOXICATED = "not_intoxicated"

# Canonical feature vocabulary, alphabetical. Every window frame carries every
# name; features whose source stream is absent hold NaN until imputation.
FEATURE_NAMES = (
    "accel_axis_changes",
    "accel_mag_var",
    "battery_rate_max",
    "battery_rate_mean",
    "battery_rate_min",
    "battery_rate_std",
    "hr_excess_kurtosis",
    "hr_max",
    "hr_mean",
    "hr_median",
    "hr_min",
    "hr_q1",
    "hr_q3",
    "hr_std",
    "noise_max",
    "noise_mean",
    "step_max",
    "step_median",
    "step_q1",
    "step_q3",
    "step_sum",
)


@dataclass(frozen=True)
class SensorRecord:
    """One raw sensor reading; ``values`` length depends on the stream."""

    participant_id: str
    timestamp: float
    stream: str
    values: tuple[float, ...]

    def __post_init__(self):
        if self.stream not in STREAMS:
            raise ValueError(f"unknown stream {self.stream!r}")
        if not math.isfinite(self.timestamp) or self.timestamp < 0:
            raise NonFiniteTimestamp(f"bad timestamp {self.timestamp!r}")
        if self.stream == "heart_rate":
            v = self.values[0]
            if not 0 < v < 300:
                raise ValueError(f"heart rate {v} outside (0, 300)")
        elif self.stream == "step_count":
            v = self.values[0]
            if v < 0 or v != int(v):
                raise ValueError(f"step count {v} must be a non-negative integer")

    @property
    def value(self) -> float:
        return self.values[0]


@dataclass
class WindowFrame:
    """One 5-minute window reduced to named statistics."""

    participant_id: str
    window_start: float
    features: dict[str, float]   # canonical order, NaN = missing
    label: Optional[str] = None  # LABEL_INTOXICATED / LABEL_NOT_INTOXICATED / None


@dataclass
class FeatureMatrix:
    """Rectangular per-participant feature matrix with an audit log."""

    participant_id: str
    feature_names: list[str]
    rows: list[list[float]]
    labels: list[Optional[int]]  # 1 = intoxicated, 0 = not, None = unlabeled
    preprocessing_log: list[dict] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(
            {
                "participant_id": self.participant_id,
                "feature_names": self.feature_names,
                "rows": self.rows,
                "labels": self.labels,
                "preprocessing_log": self.preprocessing_log,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "FeatureMatrix":
        d = json.loads(text)
        return cls(
            participant_id=d["participant_id"],
            feature_names=list(d["feature_names"]),
            rows=[list(map(float, r)) for r in d["rows"]],
            labels=[None if v is None else int(v) for v in d["labels"]],
            preprocessing_log=list(d.get("preprocessing_log", [])),
        )

    def as_array(self) -> np.ndarray:
        return np.asarray(self.rows, dtype=float)


def read_sensor_csv(path) -> list[SensorRecord]:
    """Parse `participant_id,timestamp,stream,value[,value2,value3]` rows."""
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for row in reader:
            if not row or row[0] == "participant_id":
                continue
            pid, ts, stream = row[0], float(row[1]), row[2]
            values = tuple(float(v) for v in row[3:] if v != "")
            records.append(SensorRecord(pid, ts, stream, values))
    return records


def segment_windows(
    records: Sequence[SensorRecord], window_s: float = WINDOW_SECONDS
) -> dict[tuple[str, float], list[SensorRecord]]:
    """Partition records into half-open per-participant windows.

    Windows are [k*window_s, (k+1)*window_s) offsets from each participant's
    earliest timestamp; empty windows are omitted. Returns buckets keyed by
    (participant_id, window_start).
    """
    if window_s <= 0:
        raise ValueError("window_s must be positive")
    for r in records:
        if not math.isfinite(r.timestamp):
            raise NonFiniteTimestamp(f"record at {r.timestamp!r}")
    origins: dict[str, float] = {}
    for r in records:
        cur = origins.get(r.participant_id)
        if cur is None or r.timestamp < cur:
            origins[r.participant_id] = r.timestamp
    buckets: dict[tuple[str, float], list[SensorRecord]] = {}
    for r in sorted(records, key=lambda r: (r.participant_id, r.timestamp)):
        k = math.floor((r.timestamp - origins[r.participant_id]) / window_s)
        start = origins[r.participant_id] + k * window_s
        buckets.setdefault((r.participant_id, start), []).append(r)
    return buckets


def _population_excess_kurtosis(x: np.ndarray) -> float:
    m2 = float(np.mean((x - x.mean()) ** 2))
    if m2 == 0.0:
        return 0.0  # constant series convention, avoids NaN
    m4 = float(np.mean((x - x.mean()) ** 4))
    return m4 / (m2 * m2) - 3.0


def _battery_rates(samples: list[tuple[float, float]]) -> np.ndarray:
    """Per-step battery discharge rates in level/second (positive = discharge)."""
    rates = []
    for (t0, v0), (t1, v1) in zip(samples, samples[1:]):
        dt = t1 - t0
        if dt > 0:
            rates.append((v0 - v1) / dt)
    return np.asarray(rates, dtype=float)


def extract_features(bucket: Sequence[SensorRecord]) -> WindowFrame:
    """Reduce one window's records to the canonical statistics vector."""
    if not bucket:
        raise ValueError("bucket must be non-empty")
    pid = bucket[0].participant_id
    start_anchor = min(r.timestamp for r in bucket)

    by_stream: dict[str, list[SensorRecord]] = {}
    for r in bucket:
        by_stream.setdefault(r.stream, []).append(r)

    feats = {name: float("nan") for name in FEATURE_NAMES}

    hr = by_stream.get("heart_rate")
    if hr:
        x = np.asarray([r.value for r in hr], dtype=float)
        feats["hr_mean"] = float(x.mean())
        feats["hr_median"] = float(np.median(x))
        feats["hr_min"] = float(x.min())
        feats["hr_max"] = float(x.max())
        feats["hr_q1"] = float(np.quantile(x, 0.25))
        feats["hr_q3"] = float(np.quantile(x, 0.75))
        feats["hr_std"] = float(x.std())
        feats["hr_excess_kurtosis"] = _population_excess_kurtosis(x)

    steps = by_stream.get("step_count")
    if steps:
        x = np.asarray([r.value for r in steps], dtype=float)
        feats["step_sum"] = float(x.sum())
        feats["step_median"] = float(np.median(x))
        feats["step_max"] = float(x.max())
        feats["step_q1"] = float(np.quantile(x, 0.25))
        feats["step_q3"] = float(np.quantile(x, 0.75))

    accel = by_stream.get("accelerometer")
    if accel:
        xyz = np.asarray([r.values for r in accel], dtype=float)
        mag = np.sqrt((xyz**2).sum(axis=1))
        feats["accel_mag_var"] = float(mag.var())
        # count changes of the axis holding the largest absolute reading
        dominant = np.argmax(np.abs(xyz), axis=1)
        feats["accel_axis_changes"] = float(np.count_nonzero(np.diff(dominant)))

    battery = by_stream.get("battery")
    if battery:
        samples = sorted((r.timestamp, r.value) for r in battery)
        rates = _battery_rates(samples)
        if rates.size:
            feats["battery_rate_mean"] = float(rates.mean())
            feats["battery_rate_std"] = float(rates.std())
            feats["battery_rate_max"] = float(rates.max())
            feats["battery_rate_min"] = float(rates.min())

    noise = by_stream.get("noise")
    if noise:
        x = np.asarray([r.value for r in noise], dtype=float)
        feats["noise_mean"] = float(x.mean())
        feats["noise_max"] = float(x.max())

    # gps records are accepted but produce no window features (no geocoding)
    return WindowFrame(participant_id=pid, window_start=start_anchor, features=feats)


def frames_from_records(
    records: Sequence[SensorRecord], window_s: float = WINDOW_SECONDS
) -> list[WindowFrame]:
    """segment_windows + extract_features, window_start from the bucket key."""
    frames = []
    for (pid, start), bucket in sorted(segment_windows(records, window_s).items()):
        frame = extract_features(bucket)
        frame.window_start = start
        frames.append(frame)
    return frames


def _intervals_overlap(a0: float, a1: float, b0: float, b1: float) -> bool:
    # both intervals half-open [x0, x1); zero-length events never overlap
    return a0 < b1 and b0 < a1


def label_windows(
    frames: Sequence[WindowFrame],
    events: Sequence[tuple[str, float, float, bool]],
    coverage: Optional[Sequence[tuple[str, float, float]]] = None,
    window_s: float = WINDOW_SECONDS,
) -> list[WindowFrame]:
    """Label windows from self-report events.

    A window is intoxicated iff it overlaps any intoxicated event interval;
    otherwise not_intoxicated while inside reporting coverage; windows outside
    all coverage keep no label. Coverage defaults to the union of all event
    intervals. Labeling is order-independent in the event list.
    """
    participants = {f.participant_id for f in frames}
    for ev in events:
        pid, start, end = ev[0], ev[1], ev[2]
        if start > end:
            raise ValueError(f"malformed event interval ({start}, {end})")
        if pid not in participants:
            raise UnknownParticipant(pid)
    if coverage is None:
        coverage = [(ev[0], ev[1], ev[2]) for ev in events]

    out = []
    for f in frames:
        w0, w1 = f.window_start, f.window_start + window_s
        covered = any(
            pid == f.participant_id and _intervals_overlap(w0, w1, c0, c1)
            for pid, c0, c1 in coverage
        )
        if not covered:
            label = None
        elif any(
            pid == f.participant_id and flag and _intervals_overlap(w0, w1, e0, e1)
            for pid, e0, e1, flag in events
        ):
            label = LABEL_INTOXICATED
        else:
            label = LABEL_NOT_INTOXICATED
        out.append(WindowFrame(f.participant_id, f.window_start, dict(f.features), label))
    return out


def matrix_from_frames(frames: Sequence[WindowFrame]) -> FeatureMatrix:
    """Stack frames of one participant into a FeatureMatrix (window order)."""
    if not frames:
        raise EmptyMatrix("no frames")
    pid = frames[0].participant_id
    names = sorted(frames[0].features)
    label_map = {LABEL_INTOXICATED: 1, LABEL_NOT_INTOXICATED: 0, None: None}
    ordered = sorted(frames, key=lambda f: f.window_start)
    return FeatureMatrix(
        participant_id=pid,
        feature_names=list(names),
        rows=[[f.features[n] for n in names] for f in ordered],
        labels=[label_map[f.label] for f in ordered],
    )


def _dedup_key(row: Iterable[float], label) -> tuple:
    # NaN != NaN, so dedup compares on a NaN-stable key
    return tuple("nan" if isinstance(v, float) and math.isnan(v) else v for v in row) + (label,)


def preprocess(
    matrix: FeatureMatrix, corr_threshold: float = DEFAULT_CORR_THRESHOLD
) -> FeatureMatrix:
    """Dedup rows, mean-impute, min-max normalize, prune correlated columns.

    Steps run in that order and are appended to the preprocessing log;
    normalization parameters make the transform invertible. For each pair
    with |Pearson r| >= corr_threshold the later column in canonical order is
    dropped. Idempotent on its own output (log aside).
    """
    if not matrix.rows:
        raise EmptyMatrix(matrix.participant_id)
    log = list(matrix.preprocessing_log)

    seen: set = set()
    kept_rows, kept_labels = [], []
    for row, label in zip(matrix.rows, matrix.labels):
        key = _dedup_key(row, label)
        if key in seen:
            continue
        seen.add(key)
        kept_rows.append(list(row))
        kept_labels.append(label)
    log.append({"step": "dedup", "removed": len(matrix.rows) - len(kept_rows)})

    data = np.asarray(kept_rows, dtype=float)
    imputed_cells = 0
    column_means = {}
    for j, name in enumerate(matrix.feature_names):
        col = data[:, j]
        missing = np.isnan(col)
        if missing.all():
            raise AllMissingColumn(name)
        mean = float(col[~missing].mean())
        column_means[name] = mean
        if missing.any():
            data[missing, j] = mean
            imputed_cells += int(missing.sum())
    log.append({"step": "impute", "cells": imputed_cells, "column_means": column_means})

    norm_params = {}
    constant_cols = []
    for j, name in enumerate(matrix.feature_names):
        lo, hi = float(data[:, j].min()), float(data[:, j].max())
        norm_params[name] = {"min": lo, "max": hi}
        if hi > lo:
            data[:, j] = (data[:, j] - lo) / (hi - lo)
        else:
            data[:, j] = 0.5  # constant column convention
            constant_cols.append(name)
    log.append({"step": "normalize", "params": norm_params, "constant_columns": constant_cols})

    names = list(matrix.feature_names)
    keep = [True] * len(names)
    dropped = []
    for i in range(len(names)):
        if not keep[i]:
            continue
        for j in range(i + 1, len(names)):
            if not keep[j]:
                continue
            xi, xj = data[:, i], data[:, j]
            si, sj = xi.std(), xj.std()
            if si == 0.0 or sj == 0.0:
                continue  # constant after normalization: correlation undefined
            r = float(np.corrcoef(xi, xj)[0, 1])
            if abs(r) >= corr_threshold:
                keep[j] = False
                dropped.append({"feature": names[j], "against": names[i], "r": r})
    log.append({"step": "prune", "threshold": corr_threshold, "dropped": dropped})

    kept_idx = [i for i, k in enumerate(keep) if k]
    return FeatureMatrix(
        participant_id=matrix.participant_id,
        feature_names=[names[i] for i in kept_idx],
        rows=[[float(data[r, i]) for i in kept_idx] for r in range(data.shape[0])],
        labels=kept_labels,
        preprocessing_log=log,
    )
