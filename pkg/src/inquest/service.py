"""Session service: interactive play over HTTP plus batch benchmarking.

Interactive sessions invert the batch roles: the human holds a target in
mind and answers, while the engine's oracle asks. The service holds no
target at all, so it can never leak one. Sessions are single-writer and
expire after an idle timeout.
"""

from __future__ import annotations

import json
import logging
import math
import os
import random
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Optional

from fastapi import FastAPI, HTTPException, Request
from pydantic import BaseModel

from .core import (
    Answer,
    DialogueHistory,
    FeedbackKind,
    Guess,
    SessionConfig,
    TabularResult,
    TerminationKind,
    append_turn,
    question_text,
    question_to_dict,
    render_feedback,
)
from .entropy import eig
from .environments import guess_who_dataset
from .errors import ConfigError, ExhaustedPool, InconsistentHistory, InquestError
from .metrics import ne_report
from .policies import OracleConfig, OraclePolicy
from .retrievers import tabular_filter
from .simulate import run_benchmark

logger = logging.getLogger("inquest.service")

# ---------------------------------------------------------------------------
# Service configuration
# ---------------------------------------------------------------------------


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8377
    session_timeout_minutes: float = 30.0
    benchmark_workers: int = 4
    request_log_path: Optional[str] = None


_ENV_PREFIX = "INQUEST_"


def load_service_config(path: Optional[str] = None) -> ServiceConfig:
    """Read the JSON config file, then apply INQUEST_* environment overrides."""
    data: dict = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    config = ServiceConfig(**data)
    overrides = {
        "HOST": ("host", str),
        "PORT": ("port", int),
        "SESSION_TIMEOUT_MINUTES": ("session_timeout_minutes", float),
        "BENCHMARK_WORKERS": ("benchmark_workers", int),
        "REQUEST_LOG_PATH": ("request_log_path", str),
    }
    for env_key, (attr, cast) in overrides.items():
        raw = os.environ.get(_ENV_PREFIX + env_key)
        if raw is not None:
            setattr(config, attr, cast(raw))
    return config


# ---------------------------------------------------------------------------
# Interactive sessions
# ---------------------------------------------------------------------------


@dataclass
class LiveSession:
    """One interactive game: the engine questions, the caller answers."""

    id: str
    config: SessionConfig
    schema: object
    candidates: tuple
    policy: OraclePolicy
    rng: random.Random
    history: DialogueHistory = field(default_factory=DialogueHistory)
    transcript: list = field(default_factory=list)
    pending_question: object = None
    done: bool = False
    final_guess: Optional[str] = None
    outcome: Optional[str] = None
    created_at: float = field(default_factory=time.time)
    updated_at: float = field(default_factory=time.time)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def touch(self) -> None:
        self.updated_at = time.time()


def _build_session(config: SessionConfig, session_id: str) -> LiveSession:
    kind = config.environment.kind
    if kind == "image":
        raise ConfigError("interactive sessions support the tabular tasks only")
    rng = random.Random(f"session|{config.seed}|{kind}")
    if kind == "guess_number":
        start = config.environment.window_start
        if start is None:
            start = rng.randint(0, 900)
        from .core import Candidate

        candidates = tuple(Candidate(id=str(n), number=n) for n in range(start, start + 100))
        schema = None
        oracle = OracleConfig(pool="numeric_templates")
    else:
        schema, candidates = guess_who_dataset()
        oracle = OracleConfig(pool="attribute_values")
    allow_guess = config.termination.kind is TerminationKind.EXPLICIT_GUESS
    policy = OraclePolicy(oracle, schema=schema, allow_guess=allow_guess)
    return LiveSession(
        id=session_id,
        config=config,
        schema=schema,
        candidates=candidates,
        policy=policy,
        rng=rng,
    )


def _ask_next(session: LiveSession) -> None:
    """Advance the session to its next pending question or final guess."""
    config = session.config
    if config.termination.kind is TerminationKind.SINGLETON and len(session.candidates) == 1:
        session.done = True
        session.final_guess = session.candidates[0].id
        session.outcome = "identified"
        session.pending_question = None
        return
    if len(session.history) >= config.t_max:
        session.done = True
        session.outcome = "turn_budget_exhausted"
        session.pending_question = None
        return
    try:
        session.pending_question = session.policy.next_question(
            session.candidates, session.history, session.rng
        )
    except ExhaustedPool:
        session.done = True
        session.outcome = "question_pool_exhausted"
        session.pending_question = None


def _apply_answer(session: LiveSession, answer: Answer) -> None:
    question = session.pending_question
    config = session.config
    try:
        question_eig = eig(session.candidates, question, session.schema)
    except InquestError:
        question_eig = None

    if (
        isinstance(question, Guess)
        and config.termination.kind is TerminationKind.EXPLICIT_GUESS
        and answer is Answer.YES
    ):
        session.done = True
        session.final_guess = question.candidate_id
        session.outcome = "identified"
        survivors = tuple(c for c in session.candidates if c.id == question.candidate_id)
    else:
        survivors = tabular_filter(session.candidates, question, answer, session.schema)
    feedback = None
    if config.feedback.kind is not FeedbackKind.NONE:
        feedback = render_feedback(TabularResult(survivors, session.schema), config.feedback)
    session.candidates = survivors
    session.history = append_turn(session.history, question, answer, feedback, config.t_max)
    session.transcript.append(
        {
            "turn": len(session.history) - 1,
            "question_text": question_text(question, session.schema),
            "question": question_to_dict(question),
            "answer": answer.value,
            "feedback": feedback,
            "eig": question_eig,
            "candidate_count": len(survivors),
        }
    )
    session.touch()
    if not session.done:
        _ask_next(session)


def _public_candidates(session: LiveSession) -> list[dict]:
    return [c.to_dict() for c in session.candidates]


def _entropy_bits(session: LiveSession) -> float:
    return math.log2(len(session.candidates)) if session.candidates else 0.0


def _session_state(session: LiveSession) -> dict:
    return {
        "session_id": session.id,
        "task": session.config.environment.kind,
        "done": session.done,
        "outcome": session.outcome,
        "final_guess": session.final_guess,
        "turn_index": len(session.history),
        "current_question": (
            {
                "text": question_text(session.pending_question, session.schema),
                "question": question_to_dict(session.pending_question),
            }
            if session.pending_question is not None
            else None
        ),
        "candidate_count": len(session.candidates),
        "entropy_bits": _entropy_bits(session),
        "candidates": _public_candidates(session),
        "transcript": list(session.transcript),
        "config": session.config.to_dict(),
    }


# ---------------------------------------------------------------------------
# Request bodies
# ---------------------------------------------------------------------------


class CreateSessionBody(BaseModel):
    config: dict


class AnswerBody(BaseModel):
    answer: str
    turn: Optional[int] = None


class BenchmarkBody(BaseModel):
    task: str
    targets: Optional[list[str]] = None
    seeds: Optional[list[int]] = None
    window_start: Optional[int] = None
    t_max: int = 16
    termination: str = "singleton"


# ---------------------------------------------------------------------------
# Application
# ---------------------------------------------------------------------------


def create_app(config: Optional[ServiceConfig] = None) -> FastAPI:
    service_config = config or ServiceConfig()
    app = FastAPI(title="inquest session service")
    sessions: dict[str, LiveSession] = {}
    sessions_lock = threading.Lock()

    def expire_idle() -> None:
        deadline = time.time() - service_config.session_timeout_minutes * 60.0
        with sessions_lock:
            for sid in [sid for sid, s in sessions.items() if s.updated_at < deadline]:
                del sessions[sid]

    def get_session(session_id: str) -> LiveSession:
        expire_idle()
        with sessions_lock:
            session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        return session

    @app.middleware("http")
    async def log_requests(request: Request, call_next):
        started = time.time()
        response = await call_next(request)
        if service_config.request_log_path:
            record = {
                "ts": started,
                "method": request.method,
                "path": request.url.path,
                "status": response.status_code,
                "duration_ms": round((time.time() - started) * 1000.0, 3),
            }
            with open(service_config.request_log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
        return response

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.get("/datasets")
    def datasets() -> list[dict]:
        schema, characters = guess_who_dataset()
        return [
            {
                "name": "guess-who",
                "candidates": len(characters),
                "attributes": len(schema.names),
                "normalized_entropy": ne_report(characters, schema),
            },
            {
                "name": "guess-number",
                "window_length": 100,
                "range": [0, 1000],
            },
        ]

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> dict:
        expire_idle()
        try:
            session_config = SessionConfig.from_dict(body.config)
            session = _build_session(session_config, uuid.uuid4().hex)
            _ask_next(session)
        except (ConfigError, KeyError, TypeError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        with sessions_lock:
            sessions[session.id] = session
        logger.info("session %s created (%s)", session.id, session_config.environment.kind)
        state = _session_state(session)
        return {
            "session_id": session.id,
            "first_question": state["current_question"],
            "candidate_count": state["candidate_count"],
            "state": state,
        }

    @app.post("/sessions/{session_id}/answer")
    def post_answer(session_id: str, body: AnswerBody) -> dict:
        session = get_session(session_id)
        with session.lock:
            if session.done or session.pending_question is None:
                raise HTTPException(status_code=409, detail="session already finished")
            if body.turn is not None and body.turn != len(session.history):
                raise HTTPException(
                    status_code=409,
                    detail=f"answer targets turn {body.turn}, session is at turn {len(session.history)}",
                )
            try:
                answer = Answer(body.answer)
            except ValueError:
                raise HTTPException(status_code=422, detail=f"answer must be one of {[a.value for a in Answer]}")
            try:
                _apply_answer(session, answer)
            except InconsistentHistory as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            state = _session_state(session)
            return {
                "done": session.done,
                "next_question": state["current_question"],
                "final_guess": session.final_guess,
                "candidate_count": state["candidate_count"],
                "feedback": session.transcript[-1]["feedback"],
                "turn_index": state["turn_index"],
            }

    @app.get("/sessions/{session_id}/state")
    def get_state(session_id: str) -> dict:
        session = get_session(session_id)
        with session.lock:
            return _session_state(session)

    @app.delete("/sessions/{session_id}", status_code=204)
    def delete_session(session_id: str) -> None:
        get_session(session_id)
        with sessions_lock:
            sessions.pop(session_id, None)

    @app.post("/benchmarks")
    def post_benchmark(body: BenchmarkBody) -> dict:
        from .core import EnvironmentSpec, Termination

        task = body.task.replace("-", "_")
        if task not in ("guess_number", "guess_who"):
            raise HTTPException(status_code=422, detail="benchmark tasks: guess-number, guess-who")
        try:
            termination = Termination(TerminationKind(body.termination))
            if task == "guess_number":
                window_start = body.window_start if body.window_start is not None else 86
                spec = EnvironmentSpec(kind=task, window_start=window_start)
                targets = body.targets or [str(n) for n in range(window_start, window_start + 100)]
            else:
                spec = EnvironmentSpec(kind=task)
                targets = body.targets or [c.id for c in guess_who_dataset()[1]]
            session_config = SessionConfig(environment=spec, t_max=body.t_max, termination=termination)
            seeds = body.seeds or [0]
            report, _ = run_benchmark(
                session_config, targets, seeds, workers=service_config.benchmark_workers
            )
        except InquestError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"report": report.to_dict()}

    return app


def serve(config: Optional[ServiceConfig] = None) -> None:
    """Run the service under uvicorn (blocking)."""
    import uvicorn

    service_config = config or ServiceConfig()
    uvicorn.run(create_app(service_config), host=service_config.host, port=service_config.port)
