"""HTTP boundary: sessions, messages, emotion frames, explanations, jobs.

Every domain error maps to one documented (status, code) pair. Training jobs
run on a single FIFO worker off the request path; a finished job swaps the
registry and its explanation service in as one atomic unit, so requests
never observe a half-loaded registry.
"""

from __future__ import annotations

import logging
import os
import queue
import threading
import time
import uuid
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import errors
from .chat import ChatService, ExplanationService, ServiceCore
from .cohort import ModelRegistry, train_cohort
from .config import AppConfig
from .gateway import gateway_from_config
from .sensors import FeatureMatrix
from .stats import compare_report

logger = logging.getLogger(__name__)

# documented error map: every module error surfaces as exactly one pair
ERROR_STATUS = {
    errors.UnknownParticipant: 404,
    errors.SessionNotFound: 404,
    errors.NonFiniteTimestamp: 422,
    errors.AllMissingColumn: 422,
    errors.EmptyMatrix: 422,
    errors.SingleClass: 422,
    errors.UnlabeledData: 422,
    errors.NoCandidates: 422,
    errors.InsufficientData: 422,
    errors.TooManyFeatures: 422,
    errors.EmptyBackground: 422,
    errors.TargetUnreachable: 409,
    errors.ImmutableConflict: 409,
    errors.TooManyNodes: 422,
    errors.TooFewRows: 422,
    errors.InvalidDistribution: 422,
    errors.EmptyWindow: 422,
    errors.DegenerateSample: 422,
    errors.LengthMismatch: 422,
    errors.OutOfRange: 422,
    errors.MissingCondition: 422,
    errors.ConfigError: 500,
}


class SessionBody(BaseModel):
    email: str
    participant_id: str


class MessageBody(BaseModel):
    text: str
    artifacts: Optional[list[str]] = None


class EmotionBody(BaseModel):
    timestamp: float
    distribution: dict[str, float]
    session_id: Optional[str] = None  # optional echo of the path parameter


class TrainBody(BaseModel):
    cohort: str
    seed: int = 0
    params: Optional[dict] = None


class EvalBody(BaseModel):
    csv_text: Optional[str] = None
    path: Optional[str] = None


def load_cohort_dir(path: str) -> dict[str, FeatureMatrix]:
    cohort = {}
    for name in sorted(os.listdir(path)):
        if not name.endswith(".json"):
            continue
        with open(os.path.join(path, name), encoding="utf-8") as fh:
            matrix = FeatureMatrix.from_json(fh.read())
        cohort[matrix.participant_id] = matrix
    if not cohort:
        raise errors.ConfigError(f"no participant matrices found in {path}")
    return cohort


class TrainingJobs:
    """FIFO training queue; one job executes at a time."""

    def __init__(self, chat: ChatService):
        self.chat = chat
        self.jobs: dict[str, dict] = {}
        self._queue: "queue.Queue[str]" = queue.Queue()
        self._lock = threading.Lock()
        self._worker = threading.Thread(target=self._run, daemon=True)
        self._worker.start()

    def submit(self, cohort_path: str, seed: int, params: Optional[dict]) -> str:
        job_id = uuid.uuid4().hex
        with self._lock:
            self.jobs[job_id] = {
                "id": job_id,
                "state": "queued",
                "cohort": cohort_path,
                "seed": seed,
                "params": params,
            }
        self._queue.put(job_id)
        return job_id

    def status(self, job_id: str) -> Optional[dict]:
        with self._lock:
            job = self.jobs.get(job_id)
            return dict(job) if job else None

    def _run(self) -> None:
        while True:
            job_id = self._queue.get()
            with self._lock:
                job = self.jobs[job_id]
                job["state"] = "running"
            try:
                cohort = load_cohort_dir(job["cohort"])
                registry = train_cohort(cohort, job["params"], seed=job["seed"])
                explanations = ExplanationService(registry, cohort)
                self.chat.core = ServiceCore(registry, explanations)  # atomic swap
                with self._lock:
                    job["state"] = "done"
                    job["finished_at"] = time.time()
                    job["summary"] = {
                        "participants": registry.participants(),
                        "skipped": registry.skipped,
                        "mean_accuracy": registry.mean_accuracy(),
                    }
            except Exception as exc:
                logger.exception("training job %s failed", job_id)
                with self._lock:
                    job["state"] = "failed"
                    job["finished_at"] = time.time()
                    job["reason"] = str(exc)


def build_chat_service(config: AppConfig) -> ChatService:
    try:
        registry = ModelRegistry.load(config.get("registry.path"))
        cohort = load_cohort_dir(config.get("registry.cohort"))
    except FileNotFoundError as exc:  # fail fast with a typed startup error
        raise errors.ConfigError(f"registry/cohort unreadable: {exc}") from exc
    explanations = ExplanationService(registry, cohort)
    gateway = gateway_from_config(config.section("gateway"))
    queries = config.get("chat.queries")
    kwargs = {} if queries is None else {"queries": queries}
    return ChatService(
        core=ServiceCore(registry, explanations),
        gateway=gateway,
        log_path=config.get("chat.log_path"),
        affect_settings=config.section("affect"),
        **kwargs,
    )


def create_app(config: AppConfig, chat: Optional[ChatService] = None) -> FastAPI:
    """Assemble the service; fails fast if the registry or cohort is unreadable."""
    app = FastAPI(title="carelens")
    chat = chat or build_chat_service(config)
    jobs = TrainingJobs(chat)
    app.state.chat = chat
    app.state.jobs = jobs

    @app.exception_handler(errors.CarelensError)
    async def domain_error_handler(request: Request, exc: errors.CarelensError):
        status = ERROR_STATUS.get(type(exc), 500)
        return JSONResponse(
            status_code=status,
            content={"status": status, "code": exc.code, "message": str(exc)},
        )

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/queries")
    def queries():
        return {"queries": chat.predefined_queries()}

    @app.post("/sessions", status_code=201)
    def create_session(body: SessionBody):
        session_id = chat.create_session(body.email, body.participant_id)
        return {"session_id": session_id}

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageBody):
        message = chat.post_message(session_id, body.text, body.artifacts)
        return {"session_id": session_id, **message.to_dict()}

    @app.post("/sessions/{session_id}/emotions", status_code=202)
    def post_emotion(session_id: str, body: EmotionBody):
        chat.ingest_frame(session_id, body.timestamp, body.distribution)
        return {"accepted": True}

    @app.get("/sessions/{session_id}/history")
    def history(session_id: str):
        return {
            "session_id": session_id,
            "messages": [m.to_dict() for m in chat.get_history(session_id)],
        }

    @app.get("/participants/{participant_id}/explanations/{kind}")
    def explanations(participant_id: str, kind: str, instance: Optional[int] = None):
        if kind not in ("shap", "rules", "cf", "causal"):
            return JSONResponse(
                status_code=404,
                content={"status": 404, "code": "unknown_kind", "message": kind},
            )
        kind_, artifact, spec, img64 = chat.explanations.explain(
            participant_id, kind, instance
        )
        artifact_dict = (
            [r.to_dict() for r in artifact]
            if isinstance(artifact, list)
            else artifact.to_dict()
        )
        return {
            "participant_id": participant_id,
            "kind": kind_,
            "artifact": artifact_dict,
            "chart_spec": spec.to_dict(),
            "img64": img64,
        }

    @app.post("/train", status_code=202)
    def train(body: TrainBody):
        job_id = jobs.submit(body.cohort, body.seed, body.params)
        return {"job_id": job_id}

    @app.get("/jobs/{job_id}")
    def job_status(job_id: str):
        job = jobs.status(job_id)
        if job is None:
            return JSONResponse(
                status_code=404,
                content={"status": 404, "code": "unknown_job", "message": job_id},
            )
        return job

    @app.post("/eval/compare")
    def eval_compare(body: EvalBody):
        if body.csv_text is not None:
            return compare_report(body.csv_text)
        if body.path:
            with open(body.path, encoding="utf-8") as fh:
                return compare_report(fh.read())
        return JSONResponse(
            status_code=422,
            content={
                "status": 422,
                "code": "missing_survey",
                "message": "provide csv_text or path",
            },
        )

    return app


def serve(config: AppConfig) -> None:
    import uvicorn

    app = create_app(config)
    uvicorn.run(
        app,
        host=config.get("server.host", "127.0.0.1"),
        port=int(config.get("server.port", 8000)),
        log_level="info",
    )
