"""Per-participant model training, selection and the serialized registry.

Each participant's matrix is preprocessed, split chronologically (earliest
80% train), and three candidates compete on the held-out slice: a decision
tree, logistic-loss boosted trees, and a precision-filtered rule set. The
best candidate by F1 (then accuracy, precision, recall) wins; participants
with too little labeled data are skipped with a warning, never aborting the
cohort.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Optional

from .boosting import EnsembleModel, train_boosted
from .errors import SingleClass, UnknownParticipant
from .evaluation import ModelMetrics, evaluate, select_best
from .rules import RulesModel, extract_rules
from .sensors import DEFAULT_CORR_THRESHOLD, FeatureMatrix, preprocess
from .tree import TreeModel, train_tree

logger = logging.getLogger(__name__)

MIN_LABELED_WINDOWS = 10
TRAIN_FRACTION = 0.8

DEFAULT_PARAMS = {
    "tree": {"max_depth": 3, "min_samples_leaf": 2},
    "boosted": {"n_rounds": 20, "learning_rate": 0.1, "max_depth": 3},
    "rules": {"n_trees": 25, "max_depth": 3, "min_precision": 0.9, "min_recall": 0.05},
}


def model_from_dict(d: dict):
    kind = d["kind"]
    if kind == "tree":
        return TreeModel.from_dict(d)
    if kind == "ensemble":
        return EnsembleModel.from_dict(d)
    if kind == "rules":
        return RulesModel.from_dict(d)
    raise ValueError(f"unknown model kind {kind!r}")


@dataclass
class RegistryEntry:
    participant_id: str
    selected: str  # tree | boosted | rules
    model: object
    metrics: ModelMetrics
    ranking: list[str]  # candidate names, best first
    candidate_metrics: dict[str, ModelMetrics]
    feature_names: list[str]
    split_index: int

    def to_dict(self) -> dict:
        return {
            "participant_id": self.participant_id,
            "selected": self.selected,
            "model": self.model.to_dict(),
            "metrics": self.metrics.to_dict(),
            "ranking": self.ranking,
            "candidate_metrics": {k: m.to_dict() for k, m in self.candidate_metrics.items()},
            "feature_names": self.feature_names,
            "split_index": self.split_index,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegistryEntry":
        return cls(
            participant_id=d["participant_id"],
            selected=d["selected"],
            model=model_from_dict(d["model"]),
            metrics=ModelMetrics.from_dict(d["metrics"]),
            ranking=list(d["ranking"]),
            candidate_metrics={
                k: ModelMetrics.from_dict(m) for k, m in d["candidate_metrics"].items()
            },
            feature_names=list(d["feature_names"]),
            split_index=int(d["split_index"]),
        )


@dataclass
class ModelRegistry:
    entries: dict[str, RegistryEntry] = field(default_factory=dict)
    skipped: dict[str, str] = field(default_factory=dict)  # pid -> reason

    def __contains__(self, pid: str) -> bool:
        return pid in self.entries

    def get(self, pid: str) -> RegistryEntry:
        entry = self.entries.get(pid)
        if entry is None:
            raise UnknownParticipant(pid)
        return entry

    def participants(self) -> list[str]:
        return sorted(self.entries)

    def mean_accuracy(self) -> float:
        if not self.entries:
            return 0.0
        return sum(e.metrics.accuracy for e in self.entries.values()) / len(self.entries)

    def save(self, path) -> None:
        payload = {
            "entries": {pid: e.to_dict() for pid, e in sorted(self.entries.items())},
            "skipped": self.skipped,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True)

    @classmethod
    def load(cls, path) -> "ModelRegistry":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        return cls(
            entries={
                pid: RegistryEntry.from_dict(d) for pid, d in payload["entries"].items()
            },
            skipped=dict(payload.get("skipped", {})),
        )


def chronological_split(matrix: FeatureMatrix, train_fraction: float = TRAIN_FRACTION):
    """Earliest rows train, remainder test; row order is window order."""
    n = len(matrix.rows)
    cut = max(1, int(n * train_fraction))
    if cut >= n:
        cut = n - 1
    train = FeatureMatrix(
        matrix.participant_id, list(matrix.feature_names),
        [list(r) for r in matrix.rows[:cut]], list(matrix.labels[:cut]),
    )
    test = FeatureMatrix(
        matrix.participant_id, list(matrix.feature_names),
        [list(r) for r in matrix.rows[cut:]], list(matrix.labels[cut:]),
    )
    return train, test, cut


def train_participant(
    matrix: FeatureMatrix, params: Optional[dict] = None, seed: int = 0
) -> RegistryEntry:
    """Preprocess, split, train the three candidates, select on held-out data."""
    params = {**DEFAULT_PARAMS, **(params or {})}
    prepped = preprocess(matrix, params.get("corr_threshold", DEFAULT_CORR_THRESHOLD))
    train, test, cut = chronological_split(prepped, params.get("train_fraction", TRAIN_FRACTION))

    candidates: list[tuple[str, object]] = []
    candidates.append(("tree", train_tree(train, params["tree"])))
    candidates.append(("boosted", train_boosted(train, params["boosted"])))
    try:
        rules = extract_rules(train, {**params["rules"], "seed": seed})
        candidates.append(("rules", RulesModel(rules, train.feature_names)))
    except SingleClass:
        logger.warning(
            "%s: single-class training split, rules candidate skipped",
            matrix.participant_id,
        )

    scored = [(model, evaluate(model, test)) for _, model in candidates]
    winner, order = select_best(scored)
    names = [candidates[i][0] for i in order]
    return RegistryEntry(
        participant_id=matrix.participant_id,
        selected=names[0],
        model=winner,
        metrics=scored[order[0]][1],
        ranking=names,
        candidate_metrics={
            candidates[i][0]: scored[i][1] for i in range(len(candidates))
        },
        feature_names=list(prepped.feature_names),
        split_index=cut,
    )


def train_cohort(
    cohort: dict[str, FeatureMatrix],
    params: Optional[dict] = None,
    seed: int = 0,
) -> ModelRegistry:
    registry = ModelRegistry()
    for pid in sorted(cohort):
        matrix = cohort[pid]
        labeled = sum(1 for l in matrix.labels if l is not None)
        if labeled < MIN_LABELED_WINDOWS:
            reason = f"{labeled} labeled windows < {MIN_LABELED_WINDOWS}"
            logger.warning("%s skipped: %s", pid, reason)
            registry.skipped[pid] = reason
            continue
        registry.entries[pid] = train_participant(matrix, params, seed=seed)
    return registry
