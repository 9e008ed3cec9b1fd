"""Chat sessions: per-message pipeline, explanations, append-only log.

Each message runs text sentiment, aggregates the emotion frames seen since
the previous message, fuses the affect state, renders any requested
explanation artifacts, assembles the prompt bundle and completes it through
the gateway. User and assistant rows always land in the append-only log,
even when the gateway degrades to its fallback.
"""

from __future__ import annotations

import json
import logging
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .affect import (
    DEFAULT_AFFECT,
    HYSTERESIS_THRESHOLD,
    SENTIMENT_DEAD_ZONE,
    AffectState,
    EmotionObservation,
    FrameStream,
    aggregate_window,
    analyze_text,
    classify_frame,
    fuse,
)
from .causal import MAX_NODES_DEFAULT, causal_discover
from .charts import render_artifact
from .cohort import ModelRegistry, chronological_split
from .counterfactual import counterfactual_search, surrogate_tree
from .errors import SessionNotFound, UnknownParticipant
from .gateway import CompletionRequest, fallback_response
from .prompts import assemble
from .rules import extract_rules
from .sensors import FeatureMatrix, preprocess
from .shapley import shap_explain
from .tree import TreeModel

logger = logging.getLogger(__name__)

ARTIFACT_KINDS = ("shap", "rules", "cf", "causal")

DEFAULT_QUERIES = (
    "Explain the latest prediction",
    "What features mattered most?",
    "What would change the outcome?",
    "Show the causal diagram",
)

SHAP_BACKGROUND_CAP = 50


@dataclass(frozen=True)
class ChatMessage:
    email: str
    timestamp: float
    role: str  # user | assistant
    content: str

    def to_dict(self) -> dict:
        return {
            "email": self.email,
            "timestamp": self.timestamp,
            "role": self.role,
            "content": self.content,
        }


@dataclass
class Session:
    id: str
    email: str
    participant_under_review: str
    created_at: float
    history: list[ChatMessage] = field(default_factory=list)
    affect: AffectState = DEFAULT_AFFECT
    last_user_message_ts: Optional[float] = None
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


class ExplanationService:
    """Computes and memoizes rendered explanation artifacts per participant."""

    def __init__(self, registry: ModelRegistry, cohort: dict[str, FeatureMatrix]):
        self.registry = registry
        self._matrices: dict[str, FeatureMatrix] = {}
        for pid, matrix in cohort.items():
            if pid in registry:
                prepped = preprocess(matrix)
                entry = registry.get(pid)
                if prepped.feature_names != entry.feature_names:
                    raise ValueError(
                        f"{pid}: cohort features diverge from the registry"
                    )
                self._matrices[pid] = prepped
        self._cache: dict[tuple, tuple] = {}
        self._lock = threading.Lock()

    def matrix(self, pid: str) -> FeatureMatrix:
        if pid not in self._matrices:
            raise UnknownParticipant(pid)
        return self._matrices[pid]

    def default_instance(self, pid: str) -> int:
        return len(self.matrix(pid).rows) - 1

    def explain(self, pid: str, kind: str, instance: Optional[int] = None):
        """Returns (kind, artifact, chart_spec, img64) for one participant."""
        if kind not in ARTIFACT_KINDS:
            raise ValueError(f"unknown artifact kind {kind!r}")
        matrix = self.matrix(pid)
        if instance is None:
            instance = self.default_instance(pid)
        if not 0 <= instance < len(matrix.rows):
            raise IndexError(f"instance {instance} out of range")
        key = (pid, kind, instance)
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        entry = self.registry.get(pid)
        train, _, _ = chronological_split(matrix)
        x = matrix.rows[instance]

        if kind == "shap":
            artifact = self._shap(entry, train, x, matrix.feature_names)
        elif kind == "rules":
            artifact = extract_rules(train)
        elif kind == "cf":
            artifact = self._counterfactual(entry, train, x, matrix.feature_names)
        else:
            artifact = self._causal(entry, train, x, matrix)

        spec, img64 = render_artifact(artifact, title_prefix=f"{pid}: ")
        result = (kind, artifact, spec, img64)
        with self._lock:
            self._cache[key] = result
        return result

    def _background(self, train: FeatureMatrix) -> np.ndarray:
        rows = np.asarray(train.rows, dtype=float)
        return rows[:SHAP_BACKGROUND_CAP]

    def _shap(self, entry, train, x, feature_names):
        return shap_explain(entry.model, x, self._background(train), feature_names)

    def _tree_for_search(self, entry, train) -> TreeModel:
        if isinstance(entry.model, TreeModel) and entry.model.task == "classify":
            return entry.model
        tree, fidelity = surrogate_tree(
            entry.model, np.asarray(train.rows, dtype=float)
        )
        logger.info(
            "%s: counterfactual uses a surrogate tree (fidelity %.3f)",
            entry.participant_id, fidelity,
        )
        return tree

    def _counterfactual(self, entry, train, x, feature_names):
        tree = self._tree_for_search(entry, train)
        current = entry.model.predict_output(x)
        if tree.task == "classify":
            target = 0 if current > 0.5 else 1
        else:
            target = ("<=", 0.5) if current > 0.5 else (">=", 0.5 + 1e-9)
        return counterfactual_search(tree, x, target, feature_names)

    def _causal(self, entry, train, x, matrix):
        attr = self._shap(entry, train, x, matrix.feature_names)
        top = [name for name, _ in attr.ranked()[: MAX_NODES_DEFAULT - 1]]
        idx = [matrix.feature_names.index(n) for n in top]
        sub = FeatureMatrix(
            participant_id=matrix.participant_id,
            feature_names=top,
            rows=[[row[i] for i in idx] for row in matrix.rows],
            labels=list(matrix.labels),
        )
        return causal_discover(sub)


class ChatLog:
    """Append-only line-delimited JSON persistence for chat rows."""

    def __init__(self, path):
        self.path = path
        self._lock = threading.Lock()

    def append(self, session_id: str, message: ChatMessage) -> None:
        row = {"session_id": session_id, **message.to_dict()}
        line = json.dumps(row, sort_keys=True)
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    @staticmethod
    def replay(path) -> dict[str, list[ChatMessage]]:
        """Rebuild per-session histories from the persisted log."""
        sessions: dict[str, list[ChatMessage]] = {}
        try:
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    row = json.loads(line)
                    sessions.setdefault(row["session_id"], []).append(
                        ChatMessage(
                            email=row["email"],
                            timestamp=row["timestamp"],
                            role=row["role"],
                            content=row["content"],
                        )
                    )
        except FileNotFoundError:
            pass
        return sessions


@dataclass(frozen=True)
class ServiceCore:
    """Registry plus its explanation service, swapped as one atomic unit."""

    registry: ModelRegistry
    explanations: ExplanationService


class ChatService:
    def __init__(
        self,
        core: ServiceCore,
        gateway,
        log_path,
        queries: Sequence[str] = DEFAULT_QUERIES,
        clock: Callable[[], float] = time.time,
        model_name: str = "default",
        affect_settings: Optional[dict] = None,
    ):
        self.core = core
        self.gateway = gateway
        self.log = ChatLog(log_path)
        self.queries = list(queries)
        self.clock = clock
        self.model_name = model_name
        affect_settings = affect_settings or {}
        self.hysteresis = float(affect_settings.get("hysteresis", HYSTERESIS_THRESHOLD))
        self.dead_zone = float(affect_settings.get("dead_zone", SENTIMENT_DEAD_ZONE))
        self.frames = FrameStream()
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    @property
    def registry(self) -> ModelRegistry:
        return self.core.registry

    @property
    def explanations(self) -> ExplanationService:
        return self.core.explanations

    # --- lifecycle ---

    def create_session(self, email: str, participant_id: str) -> str:
        if participant_id not in self.registry:
            raise UnknownParticipant(participant_id)
        session = Session(
            id=uuid.uuid4().hex,
            email=email,
            participant_under_review=participant_id,
            created_at=self.clock(),
        )
        with self._lock:
            self._sessions[session.id] = session
        return session.id

    def _session(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise SessionNotFound(session_id)
        return session

    # --- emotion frames ---

    def ingest_frame(self, session_id: str, timestamp: float, distribution: dict) -> None:
        session = self._session(session_id)
        self.frames.append(
            EmotionObservation(session.id, timestamp, dict(distribution))
        )

    # --- messaging ---

    def predefined_queries(self) -> list[str]:
        return list(self.queries)

    def get_history(self, session_id: str) -> list[ChatMessage]:
        return list(self._session(session_id).history)

    def post_message(
        self,
        session_id: str,
        text: str,
        requested_artifacts: Optional[Sequence[str]] = None,
    ) -> ChatMessage:
        session = self._session(session_id)
        with session.lock:  # per-session serialization
            core = self.core  # one snapshot per message; swaps stay atomic
            now = self.clock()
            sentiment = analyze_text(text, dead_zone=self.dead_zone)
            observations = self.frames.collect(
                session.id, now, since=session.last_user_message_ts
            )
            if observations:
                classified = [classify_frame(o) for o in observations]
                face = aggregate_window(classified)
            else:
                face = (None, 0.0)
            session.affect = fuse(face, sentiment, session.affect, hysteresis=self.hysteresis)

            artifacts = []
            for kind in requested_artifacts or ():
                _, artifact, _, img64 = core.explanations.explain(
                    session.participant_under_review, kind
                )
                artifacts.append((kind, artifact, img64))

            bundle = assemble(
                state=session.affect,
                artifacts=artifacts,
                history=[(m.role, m.content) for m in session.history],
                user_message=text,
                participant_id=session.participant_under_review,
            )
            request = CompletionRequest(bundle=bundle, model=self.model_name)
            try:
                response = self.gateway.complete(request)
            except Exception as exc:  # backends degrade, but belt and braces
                logger.warning("gateway raised %s; serving fallback", exc)
                response = fallback_response(request, "unknown", 0.0)

            user_row = ChatMessage(session.email, now, "user", text)
            assistant_row = ChatMessage(
                session.email, max(self.clock(), now), "assistant", response.text
            )
            session.history.append(user_row)
            session.history.append(assistant_row)
            session.last_user_message_ts = now
            self.log.append(session.id, user_row)
            self.log.append(session.id, assistant_row)
            self.frames.prune(session.id, now)
            return assistant_row
