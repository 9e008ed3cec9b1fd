"""Model evaluation metrics and per-participant model selection."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NoCandidates, UnlabeledData

logger = logging.getLogger(__name__)

DECISION_THRESHOLD = 0.5


@dataclass(frozen=True)
class ModelMetrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    tn: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "confusion": {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelMetrics":
        c = d["confusion"]
        return cls(
            accuracy=d["accuracy"], precision=d["precision"], recall=d["recall"],
            f1=d["f1"], tp=c["tp"], fp=c["fp"], fn=c["fn"], tn=c["tn"],
        )


def metrics_from_confusion(tp: int, fp: int, fn: int, tn: int) -> ModelMetrics:
    total = tp + fp + fn + tn
    accuracy = (tp + tn) / total if total else 0.0
    # zero-denominator convention: undefined precision/recall count as 0
    precision = tp / (tp + fp) if (tp + fp) else 0.0
    recall = tp / (tp + fn) if (tp + fn) else 0.0
    if (tp + fp) == 0 or (tp + fn) == 0:
        logger.debug("zero-denominator metric mapped to 0 (tp=%d fp=%d fn=%d)", tp, fp, fn)
    f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
    return ModelMetrics(accuracy, precision, recall, f1, tp, fp, fn, tn)


def evaluate(model, matrix, threshold: float = DECISION_THRESHOLD) -> ModelMetrics:
    """Score a probability model on a labeled FeatureMatrix.

    Probabilities strictly above the threshold count as the positive class.
    """
    rows = [(r, l) for r, l in zip(matrix.rows, matrix.labels) if l is not None]
    if not rows:
        raise UnlabeledData(matrix.participant_id)
    X = np.asarray([r for r, _ in rows], dtype=float)
    y = np.asarray([l for _, l in rows], dtype=int)
    pred = (model.predict_output_batch(X) > threshold).astype(int)
    tp = int(((pred == 1) & (y == 1)).sum())
    fp = int(((pred == 1) & (y == 0)).sum())
    fn = int(((pred == 0) & (y == 1)).sum())
    tn = int(((pred == 0) & (y == 0)).sum())
    return metrics_from_confusion(tp, fp, fn, tn)


def select_best(candidates: Sequence[tuple[object, ModelMetrics]]) -> tuple[object, list[int]]:
    """Pick the winner by F1, then accuracy, precision, recall, input order.

    Returns (model, ranking) where ranking holds candidate indices from best
    to worst; ties resolve to the earlier candidate (stable).
    """
    if not candidates:
        raise NoCandidates("no candidate models")
    order = sorted(
        range(len(candidates)),
        key=lambda i: (
            -candidates[i][1].f1,
            -candidates[i][1].accuracy,
            -candidates[i][1].precision,
            -candidates[i][1].recall,
            i,
        ),
    )
    return candidates[order[0]][0], order
