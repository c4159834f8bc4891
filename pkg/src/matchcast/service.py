"""HTTP service for live match sessions.

An operator creates a session for a fixture, posts events / clock
advances / stoppage announcements as they happen (undo supported), and
polls forecasts that condition on the current state.  Sessions are
in-memory; with a log directory configured every command is appended to
a JSONL file so sessions can be rebuilt after a restart.

Endpoints:
    POST /sessions
    POST /sessions/{id}/events
    POST /sessions/{id}/clock
    POST /sessions/{id}/stoppage
    POST /sessions/{id}/undo
    GET  /sessions/{id}/forecast
    GET  /sessions/{id}/history

All request times use (half, minute, stoppage_offset); the service never
accepts raw clock values.  Error bodies carry {"code", "message"}.
"""

from __future__ import annotations

import json
import secrets
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .core import (
    EventType,
    MatchDataError,
    TIE_EPS,
    clock_time,
    state_at_clock,
)
from .data_io import ModelArtifact
from .simulator import SimulationModel, SimulationError, simulate_many

DEFAULT_FORECAST_N = 20_000


class ApiError(HTTPException):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(status_code=status, detail={"code": code, "message": message})


# ------------------------------------------------------------- request DTOs


class CreateSession(BaseModel):
    model_config = {"protected_namespaces": ()}

    model_id: str
    home_team: str
    away_team: str
    home_value: float = Field(gt=0)
    away_value: float = Field(gt=0)


class EventIn(BaseModel):
    type: str
    half: int
    minute: int
    stoppage_offset: int = 0


class ClockIn(BaseModel):
    half: int
    minute: int
    stoppage_offset: int = 0


class StoppageIn(BaseModel):
    half: int
    minutes: int = Field(ge=0)


# ---------------------------------------------------------------- sessions


@dataclass
class Session:
    session_id: str
    model_id: str
    artifact: ModelArtifact
    home_team: str
    away_team: str
    home_value: float
    away_value: float
    log: list = field(default_factory=list)  # command dicts, append-only
    forecasts: list = field(default_factory=list)  # recorded forecast history
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    # ---- state reconstruction (replay of the command log)

    def _replayed(self, extra: Optional[list] = None):
        """(events, u1, u2, clock) after replaying log + optional extras."""
        events: list[tuple[EventType, float]] = []
        u1: Optional[int] = None
        u2: Optional[int] = None
        clock = 0.0
        for cmd in self.log + (extra or []):
            kind = cmd["kind"]
            if kind == "event":
                t = clock_time(cmd["half"], cmd["minute"], cmd["stoppage_offset"], u1)
                if events and t <= events[-1][1]:
                    t = events[-1][1] + TIE_EPS
                events.append((EventType(cmd["type"]), t))
                clock = max(clock, t)
            elif kind == "clock":
                t = clock_time(cmd["half"], cmd["minute"], cmd["stoppage_offset"], u1)
                clock = max(clock, t)
            elif kind == "stoppage":
                if cmd["half"] == 1:
                    u1 = cmd["minutes"]
                else:
                    u2 = cmd["minutes"]
        return events, u1, u2, clock

    def state(self, extra: Optional[list] = None):
        events, u1, u2, clock = self._replayed(extra)
        return state_at_clock(events, clock, u1, u2)

    def validate_command(self, cmd: dict) -> None:
        """Raise ApiError on time regression or ordering violations."""
        events, u1, u2, clock = self._replayed()
        kind = cmd["kind"]
        if kind in ("event", "clock"):
            if cmd["half"] == 2 and u1 is None:
                raise ApiError(
                    422,
                    "stoppage_not_announced",
                    "second-half times need the first-half stoppage announcement",
                )
            try:
                t = clock_time(cmd["half"], cmd["minute"], cmd["stoppage_offset"], u1)
            except MatchDataError as exc:
                raise ApiError(422, "invalid_time", str(exc))
            limit = u1 if cmd["half"] == 1 else u2
            if cmd["stoppage_offset"] > 0 and (limit is None or cmd["stoppage_offset"] > limit):
                raise ApiError(
                    422,
                    "beyond_announced_stoppage",
                    f"stoppage minute {cmd['stoppage_offset']} exceeds the announced "
                    f"{'none' if limit is None else limit}",
                )
            if t < clock:
                raise ApiError(
                    409, "time_regression", f"time {t:g} is before the current clock {clock:g}"
                )
        elif kind == "stoppage":
            if cmd["half"] == 1:
                if u1 is not None:
                    raise ApiError(409, "already_announced", "first-half stoppage already set")
                if clock < 44.5:
                    raise ApiError(
                        422, "too_early", "announce first-half stoppage at minute 45 or later"
                    )
            else:
                if u1 is None:
                    raise ApiError(422, "stoppage_not_announced", "announce the first half first")
                if u2 is not None:
                    raise ApiError(409, "already_announced", "second-half stoppage already set")
                if clock < 45.0 + u1 + 44.5:
                    raise ApiError(
                        422, "too_early", "announce second-half stoppage at minute 90 or later"
                    )

    def state_doc(self) -> dict:
        st = self.state()
        return {
            "clock": st.clock,
            "half": st.half,
            "home_goals": st.home_goals,
            "away_goals": st.away_goals,
            "home_reds": st.home_reds,
            "away_reds": st.away_reds,
            "stoppage1": st.u1,
            "stoppage2": st.u2,
        }


# -------------------------------------------------------------------- app


class ServiceState:
    def __init__(self, models: dict[str, ModelArtifact], default_n: int, log_dir: Optional[Path]):
        self.models = models
        self.default_n = default_n
        self.log_dir = log_dir
        self.sessions: dict[str, Session] = {}
        self.registry_lock = threading.Lock()
        if log_dir is not None:
            log_dir.mkdir(parents=True, exist_ok=True)
            self._restore()

    def _restore(self) -> None:
        for path in sorted(self.log_dir.glob("session-*.jsonl")):
            with open(path, encoding="utf-8") as fh:
                lines = [json.loads(line) for line in fh if line.strip()]
            if not lines or lines[0].get("kind") != "create":
                continue
            head = lines[0]
            art = self.models.get(head["model_id"])
            if art is None:
                continue
            sess = Session(
                session_id=head["session_id"],
                model_id=head["model_id"],
                artifact=art,
                home_team=head["home_team"],
                away_team=head["away_team"],
                home_value=head["home_value"],
                away_value=head["away_value"],
                log=[cmd for cmd in lines[1:] if cmd.get("kind") != "create"],
            )
            self.sessions[sess.session_id] = sess

    def log_path(self, session_id: str) -> Optional[Path]:
        if self.log_dir is None:
            return None
        return self.log_dir / f"session-{session_id}.jsonl"

    def append_log(self, sess: Session, cmd: dict) -> None:
        path = self.log_path(sess.session_id)
        if path is None:
            return
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(cmd, sort_keys=True) + "\n")

    def rewrite_log(self, sess: Session, head: dict) -> None:
        path = self.log_path(sess.session_id)
        if path is None:
            return
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(head, sort_keys=True) + "\n")
            for cmd in sess.log:
                fh.write(json.dumps(cmd, sort_keys=True) + "\n")


def create_app(
    models: dict[str, ModelArtifact],
    default_n: int = DEFAULT_FORECAST_N,
    log_dir: Optional[Path] = None,
) -> FastAPI:
    state = ServiceState(models, default_n, log_dir)
    app = FastAPI(title="matchcast live forecasts", version="1")
    app.state.service = state
    # single-operator desk tool; the browser console may be served from disk
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    def _session(session_id: str) -> Session:
        sess = state.sessions.get(session_id)
        if sess is None:
            raise ApiError(404, "unknown_session", f"no session {session_id!r}")
        return sess

    @app.exception_handler(ApiError)
    async def _api_error(_, exc: ApiError):
        return JSONResponse(status_code=exc.status_code, content=exc.detail)

    @app.get("/models")
    def list_models():
        return {
            name: {"teams": list(art.spec.teams), "n_params": art.spec.n_params}
            for name, art in state.models.items()
        }

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSession):
        art = state.models.get(body.model_id)
        if art is None:
            raise ApiError(422, "unknown_model", f"no model {body.model_id!r} loaded")
        if art.spec.uses_teams:
            for team in (body.home_team, body.away_team):
                if team not in art.spec.teams:
                    raise ApiError(422, "unknown_team", f"team {team!r} unknown to {body.model_id!r}")
        if body.home_team == body.away_team:
            raise ApiError(422, "invalid_fixture", "home and away teams must differ")
        try:
            SimulationModel(art.spec, art.params, body.home_team, body.away_team, body.home_value, body.away_value)
        except SimulationError as exc:
            raise ApiError(422, "model_not_simulatable", str(exc))
        sess = Session(
            session_id=uuid.uuid4().hex,
            model_id=body.model_id,
            artifact=art,
            home_team=body.home_team,
            away_team=body.away_team,
            home_value=body.home_value,
            away_value=body.away_value,
        )
        with state.registry_lock:
            state.sessions[sess.session_id] = sess
        state.append_log(
            sess,
            {
                "kind": "create",
                "session_id": sess.session_id,
                "model_id": sess.model_id,
                "home_team": sess.home_team,
                "away_team": sess.away_team,
                "home_value": sess.home_value,
                "away_value": sess.away_value,
            },
        )
        return {"session_id": sess.session_id, "state": sess.state_doc()}

    def _commit(sess: Session, cmd: dict) -> dict:
        sess.validate_command(cmd)
        sess.log.append(cmd)
        app.state.service.append_log(sess, cmd)
        return sess.state_doc()

    @app.post("/sessions/{session_id}/events")
    def post_event(session_id: str, body: EventIn):
        sess = _session(session_id)
        try:
            etype = EventType(body.type)
        except ValueError:
            raise ApiError(422, "unknown_event_type", f"event type {body.type!r} unknown")
        cmd = {
            "kind": "event",
            "type": etype.value,
            "half": body.half,
            "minute": body.minute,
            "stoppage_offset": body.stoppage_offset,
        }
        with sess.lock:
            return {"state": _commit(sess, cmd)}

    @app.post("/sessions/{session_id}/clock")
    def post_clock(session_id: str, body: ClockIn):
        sess = _session(session_id)
        cmd = {
            "kind": "clock",
            "half": body.half,
            "minute": body.minute,
            "stoppage_offset": body.stoppage_offset,
        }
        with sess.lock:
            return {"state": _commit(sess, cmd)}

    @app.post("/sessions/{session_id}/stoppage")
    def post_stoppage(session_id: str, body: StoppageIn):
        sess = _session(session_id)
        if body.half not in (1, 2):
            raise ApiError(422, "invalid_time", "half must be 1 or 2")
        cmd = {"kind": "stoppage", "half": body.half, "minutes": body.minutes}
        with sess.lock:
            return {"state": _commit(sess, cmd)}

    @app.post("/sessions/{session_id}/undo")
    def undo(session_id: str):
        sess = _session(session_id)
        with sess.lock:
            if not sess.log:
                raise ApiError(409, "nothing_to_undo", "the command log is empty")
            undone = sess.log.pop()
            state.rewrite_log(
                sess,
                {
                    "kind": "create",
                    "session_id": sess.session_id,
                    "model_id": sess.model_id,
                    "home_team": sess.home_team,
                    "away_team": sess.away_team,
                    "home_value": sess.home_value,
                    "away_value": sess.away_value,
                },
            )
            return {"undone": undone, "state": sess.state_doc()}

    @app.get("/sessions/{session_id}/forecast")
    def get_forecast(
        session_id: str,
        n: Optional[int] = Query(default=None, ge=100, le=1_000_000),
        seed: Optional[int] = None,
        what_if_type: Optional[str] = None,
        what_if_half: Optional[int] = None,
        what_if_minute: Optional[int] = None,
        what_if_offset: int = 0,
    ):
        sess = _session(session_id)
        n_scen = n or state.default_n
        used_seed = seed if seed is not None else secrets.randbits(48)
        extra = None
        if what_if_type is not None:
            if what_if_half is None or what_if_minute is None:
                raise ApiError(422, "invalid_what_if", "what_if needs type, half and minute")
            try:
                etype = EventType(what_if_type)
            except ValueError:
                raise ApiError(422, "unknown_event_type", f"event type {what_if_type!r} unknown")
            cmd = {
                "kind": "event",
                "type": etype.value,
                "half": what_if_half,
                "minute": what_if_minute,
                "stoppage_offset": what_if_offset,
            }
            extra = [cmd]
        with sess.lock:
            if extra is not None:
                sess.validate_command(extra[0])
            st = sess.state(extra)
            try:
                sim = SimulationModel(
                    sess.artifact.spec,
                    sess.artifact.params,
                    sess.home_team,
                    sess.away_team,
                    sess.home_value,
                    sess.away_value,
                )
                dist = simulate_many(sim, st, n=n_scen, seed=used_seed)
            except SimulationError as exc:
                raise ApiError(422, "simulation_failed", str(exc))
            doc = dist.to_jsonable()
            doc["clock"] = st.clock
            doc["what_if"] = extra[0] if extra else None
            doc["cutoff"] = sess.state_doc()
            if extra is None:
                sess.forecasts.append({"clock": st.clock, "forecast": doc})
        return doc

    @app.get("/sessions/{session_id}/history")
    def get_history(session_id: str):
        sess = _session(session_id)
        with sess.lock:
            return {
                "session_id": sess.session_id,
                "model_id": sess.model_id,
                "home_team": sess.home_team,
                "away_team": sess.away_team,
                "state": sess.state_doc(),
                "events": [cmd for cmd in sess.log],
                "forecasts": list(sess.forecasts),
            }

    return app
