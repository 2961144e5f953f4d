"""HTTP session service: Algorithm-style assessment where the oracle is a
human (or external system) answering one query at a time.

Protocol (all JSON):
    POST /sessions                -> 201 {"session_id": ...}
    GET  /sessions/{id}/next      -> pending query; idempotent until labeled
    POST /sessions/{id}/label     -> posterior digest for the applied outcome
    GET  /sessions/{id}/state     -> full report snapshot + pending + progress

Errors use {"error": code, "message": text}. A session serializes its
requests internally, so concurrent clients cannot race the bandit loop.
"""

import json
import logging
import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..engine import (ActiveSession, ConfigError, SessionConfig, SessionDone,
                      SubmitMismatch)
from ..pool import Pool
from ..reporting import session_report
from .schemas import (CreateSessionRequest, CreateSessionResponse,
                      ErrorResponse, LabelRequest, LabelResponse,
                      NextQueryResponse)

log = logging.getLogger(__name__)

ERROR_CODES = {400: "bad-request", 401: "unauthorized", 404: "not-found",
               409: "conflict", 410: "gone", 422: "unprocessable"}


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        self.status = status
        self.message = message
        super().__init__(message)


class SessionHolder:
    def __init__(self, session_id: str, session: ActiveSession, log_path: Path | None):
        self.id = session_id
        self.session = session
        self.lock = threading.Lock()
        self.log_path = log_path

    def append_log(self, record: dict):
        if self.log_path is None:
            return
        with open(self.log_path, "a") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


class ServiceState:
    def __init__(self, pool: Pool, defaults: SessionConfig | None,
                 state_dir: Path | None):
        self.pool = pool
        self.defaults = defaults
        self.state_dir = state_dir
        self.sessions: dict[str, SessionHolder] = {}
        self.registry_lock = threading.Lock()
        if state_dir is not None:
            state_dir.mkdir(parents=True, exist_ok=True)
            self._restore()

    def build_config(self, overrides: dict) -> SessionConfig:
        base = self.defaults.to_dict() if self.defaults is not None else {}
        merged = {**base, **overrides}
        for section in ("partition", "prior", "strategy"):
            if section in base and section in overrides:
                merged[section] = {**base[section], **overrides[section]}
        if "task" not in merged:
            raise ConfigError("config is incomplete: no task given and the server has no default")
        if "seed" not in merged:
            raise ConfigError("config needs an explicit seed (no wall-clock seeding)")
        if "partition" not in merged:
            merged["partition"] = {"kind": "predicted-class"}
        return SessionConfig.from_dict(merged)

    def create(self, overrides: dict) -> SessionHolder:
        cfg = self.build_config(overrides)
        session = ActiveSession(self.pool, cfg)
        if cfg.strategy.kind == "multiple-play-thompson" and cfg.strategy.m > session.num_arms:
            raise ConfigError(
                f"multiple-play m={cfg.strategy.m} exceeds the {session.num_arms} groups")
        session_id = uuid.uuid4().hex
        log_path = None
        if self.state_dir is not None:
            log_path = self.state_dir / f"{session_id}.jsonl"
            with open(log_path, "w") as fh:
                fh.write(json.dumps({"session_id": session_id, "config": cfg.to_dict()},
                                    sort_keys=True) + "\n")
        holder = SessionHolder(session_id, session, log_path)
        with self.registry_lock:
            self.sessions[session_id] = holder
        return holder

    def get(self, session_id: str) -> SessionHolder:
        holder = self.sessions.get(session_id)
        if holder is None:
            raise ApiError(404, f"unknown session {session_id!r}")
        return holder

    def _restore(self):
        """Rebuild sessions from append-only logs by replaying outcomes
        through the engine; the deterministic loop re-derives every query."""
        for path in sorted(self.state_dir.glob("*.jsonl")):
            try:
                self._restore_one(path)
            except Exception:
                log.exception("could not restore session log %s", path)

    def _restore_one(self, path: Path):
        with open(path) as fh:
            lines = [json.loads(line) for line in fh if line.strip()]
        if not lines:
            return
        head = lines[0]
        cfg = SessionConfig.from_dict(head["config"])
        session = ActiveSession(self.pool, cfg)
        for row in lines[1:]:
            query = session.next_query()
            if query.instance_id != row["id"]:
                raise RuntimeError(
                    f"replay diverged: log has {row['id']!r}, engine drew {query.instance_id!r}")
            session.submit(row["id"], row["z"])
        holder = SessionHolder(head["session_id"], session, path)
        self.sessions[head["session_id"]] = holder


def create_app(pool: Pool, defaults: SessionConfig | None = None,
               token: str | None = None, state_dir=None) -> FastAPI:
    state = ServiceState(pool, defaults, Path(state_dir) if state_dir else None)
    app = FastAPI(title="bayesassess labeling service", version="0.1.0")
    app.state.service = state

    def check_token(request: Request):
        if token is not None and request.headers.get("x-auth-token") != token:
            raise ApiError(401, "missing or invalid X-Auth-Token")

    @app.exception_handler(ApiError)
    async def api_error_handler(request, exc: ApiError):
        body = ErrorResponse(error=ERROR_CODES.get(exc.status, "error"), message=exc.message)
        return JSONResponse(status_code=exc.status, content=body.model_dump())

    @app.post("/sessions", response_model=CreateSessionResponse, status_code=201)
    def create_session(body: CreateSessionRequest, request: Request):
        check_token(request)
        try:
            holder = state.create(body.config.overrides())
        except (ConfigError, ValueError) as exc:
            raise ApiError(400, str(exc)) from exc
        return CreateSessionResponse(session_id=holder.id)

    @app.get("/sessions/{session_id}/next", response_model=NextQueryResponse)
    def next_query(session_id: str, request: Request):
        check_token(request)
        holder = state.get(session_id)
        with holder.lock:
            try:
                query = holder.session.next_query()
            except SessionDone as exc:
                raise ApiError(410, f"session is over: {exc.reason}") from exc
            return NextQueryResponse(**query.to_dict())

    @app.post("/sessions/{session_id}/label", response_model=LabelResponse)
    def submit_label(session_id: str, body: LabelRequest, request: Request):
        check_token(request)
        holder = state.get(session_id)
        with holder.lock:
            session = holder.session
            pending = session.pending
            duplicate = (session._last_submit is not None
                         and session._last_submit[:2] == (body.instance_id, body.outcome))
            if pending is None and not duplicate:
                raise ApiError(409, "no query is pending; GET /next first")
            try:
                digest = session.submit(body.instance_id, body.outcome)
            except SubmitMismatch as exc:
                raise ApiError(409, str(exc)) from exc
            except ValueError as exc:
                raise ApiError(422, str(exc)) from exc
            if not duplicate:
                holder.append_log({"i": digest["step"], "group": digest["group"],
                                   "id": body.instance_id, "z": body.outcome,
                                   "post": {"mean": digest["mean"], "trials": digest["trials"]}})
            return LabelResponse(**{k: digest[k] for k in ("group", "mean", "trials", "step")})

    @app.get("/sessions/{session_id}/state")
    def get_state(session_id: str, request: Request):
        check_token(request)
        holder = state.get(session_id)
        with holder.lock:
            session = holder.session
            report = session_report(session)
            report["session_id"] = session_id
            pending = session.pending
            report["pending"] = pending.to_dict() if pending else None
            report["progress"] = {
                "labels": session.labels_used,
                "budget": session.cfg.budget,
                "terminal": session.terminal_reason,
            }
            return JSONResponse(content=json.loads(json.dumps(report, sort_keys=True)))

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "pool_size": len(pool), "sessions": len(state.sessions)}

    return app
