"""HTTP surface: participant endpoints, lecturer controls, and the event feed.

Commands funnel through the store, which serializes them per session; reads
that walk mutable state take the same lock so views never observe a command
half-applied. The feed endpoints support plain polling, long polling, and
server-sent events over the identical event projection.
"""

from __future__ import annotations

import hmac
import json
import time
from pathlib import Path

from fastapi import FastAPI, Header, Request
from fastapi.responses import JSONResponse, PlainTextResponse, StreamingResponse
from pydantic import BaseModel

from . import authority
from .errors import (
    ClosedTenderError,
    DuplicateBidError,
    ForbiddenError,
    GameError,
    NotFoundError,
    PhaseError,
    StalenessError,
)
from .store import SessionStore

MAX_LONG_POLL = 30.0
MAX_STREAM_SECONDS = 3600.0
POLL_INTERVAL = 0.1

_STATUS = (
    (NotFoundError, 404),
    (ForbiddenError, 403),
    (PhaseError, 409),
    (ClosedTenderError, 409),
    (DuplicateBidError, 409),
    (StalenessError, 409),
)


def _status_for(exc: GameError) -> int:
    for klass, code in _STATUS:
        if isinstance(exc, klass):
            return code
    return 400


class CreateSessionBody(BaseModel):
    class_size: int
    seed: int
    round_seconds: int = 300
    session_id: str | None = None


class JoinBody(BaseModel):
    code: str
    name: str


class BidBody(BaseModel):
    code: str
    tender_id: str
    amount: int | float | str


class ChatBody(BaseModel):
    code: str
    text: str


class ClassifyBody(BaseModel):
    code: str
    labels: dict[str, str]


class RoundBody(BaseModel):
    year: int
    round: int | None = None
    group_id: str | None = None


def create_app(store: SessionStore, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="tetravale", docs_url=None, redoc_url=None)

    @app.exception_handler(GameError)
    def game_error(_request: Request, exc: GameError) -> JSONResponse:
        payload: dict = {"detail": str(exc)}
        if isinstance(exc, PhaseError) and exc.blockers:
            payload["blockers"] = exc.blockers
        return JSONResponse(status_code=_status_for(exc), content=payload)

    def require_lecturer(sid: str, token: str | None):
        session = store.get(sid)
        if not token or not hmac.compare_digest(token, session.lecturer_token):
            raise ForbiddenError("a valid X-Lecturer-Token header is required")
        return session

    def feed_scope(sid: str, code: str | None, token: str | None):
        """(session, group filter, lecturer?) for the event feed."""
        session = store.get(sid)
        if token is not None and hmac.compare_digest(token, session.lecturer_token):
            return session, None, True
        if code:
            return session, session.group_of(code), False
        return session, None, False

    def feed_slice(session, after: int, group: str | None, all_groups: bool) -> list[dict]:
        if all_groups:
            return [e for e in session.feed if e["index"] > after]
        return session.events_since(after, group)

    @app.get("/healthz")
    def healthz() -> dict:
        return {"ok": True}

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> dict:
        _session, result = store.create(
            class_size=body.class_size,
            seed=body.seed,
            round_seconds=body.round_seconds,
            session_id=body.session_id,
        )
        return result

    @app.get("/sessions/{sid}")
    def session_summary(sid: str) -> dict:
        session = store.get(sid)
        with store.lock(sid):
            return {
                "session_id": session.session_id,
                "phase": session.phase,
                "class_size": session.class_size,
                "groups": {
                    gid: size
                    for gid, size in zip(session.engine.group_ids, session.allocation.groups)
                },
                "joined": len(session.participants),
            }

    @app.post("/sessions/{sid}/join")
    def join(sid: str, body: JoinBody) -> dict:
        return store.apply(sid, "join", {"code": body.code, "name": body.name})

    @app.get("/sessions/{sid}/participants/{code}")
    def participant_state(sid: str, code: str) -> dict:
        session = store.get(sid)
        with store.lock(sid):
            return session.participant_view(code)

    @app.post("/sessions/{sid}/bids")
    def submit_bid(sid: str, body: BidBody) -> dict:
        return store.apply(
            sid, "bid", {"code": body.code, "tender_id": body.tender_id, "amount": body.amount}
        )

    @app.post("/sessions/{sid}/chat")
    def post_chat(sid: str, body: ChatBody) -> dict:
        return store.apply(sid, "chat", {"code": body.code, "text": body.text})

    @app.get("/sessions/{sid}/chat")
    def read_chat(sid: str, code: str) -> dict:
        session = store.get(sid)
        with store.lock(sid):
            group = session.group_of(code)
            messages = [
                {
                    "seq": m["seq"],
                    "name": m["name"],
                    "seat": m["seat"],
                    "text": m["text"],
                    "year": m["year"],
                    "round": m["round"],
                }
                for m in session.chat_log
                if m["group_id"] == group
            ]
        return {"group_id": group, "messages": messages}

    @app.get("/sessions/{sid}/part3/dataset.csv")
    def part3_dataset(sid: str) -> PlainTextResponse:
        session = store.get(sid)
        with store.lock(sid):
            text = session.part3_dataset_csv()
        return PlainTextResponse(text, media_type="text/csv")

    @app.get("/sessions/{sid}/training-data.csv")
    def training_data(sid: str) -> PlainTextResponse:
        session = store.get(sid)
        with store.lock(sid):
            if session.training_csv is None:
                raise NotFoundError("no training data has been ingested")
            text = session.training_csv
        return PlainTextResponse(text, media_type="text/csv")

    @app.post("/sessions/{sid}/classifications")
    def classify(sid: str, body: ClassifyBody) -> dict:
        return store.apply(sid, "classify", {"code": body.code, "labels": body.labels})

    @app.post("/sessions/{sid}/classifications/csv")
    async def classify_csv(sid: str, code: str, request: Request) -> dict:
        text = (await request.body()).decode("utf-8")
        labels = authority.submission_from_csv(text)
        args = {"code": code, "labels": {str(k): v for k, v in labels.items()}}
        return store.apply(sid, "classify", args)

    @app.get("/sessions/{sid}/events")
    def events(
        sid: str,
        code: str | None = None,
        after: int = -1,
        wait: float = 0.0,
        x_lecturer_token: str | None = Header(default=None),
    ) -> dict:
        session, group, is_lecturer = feed_scope(sid, code, x_lecturer_token)
        deadline = time.monotonic() + max(0.0, min(wait, MAX_LONG_POLL))
        while True:
            batch = feed_slice(session, after, group, is_lecturer)
            if batch or time.monotonic() >= deadline:
                break
            time.sleep(POLL_INTERVAL)
        latest = batch[-1]["index"] if batch else after
        return {"events": batch, "latest": latest}

    @app.get("/sessions/{sid}/stream")
    def stream(
        sid: str,
        code: str | None = None,
        after: int = -1,
        timeout: float = 60.0,
        x_lecturer_token: str | None = Header(default=None),
    ) -> StreamingResponse:
        session, group, is_lecturer = feed_scope(sid, code, x_lecturer_token)
        window = max(0.0, min(timeout, MAX_STREAM_SECONDS))

        def generate():
            cursor = after
            deadline = time.monotonic() + window
            last_beat = time.monotonic()
            yield ": connected\n\n"
            while time.monotonic() < deadline:
                batch = feed_slice(session, cursor, group, is_lecturer)
                for entry in batch:
                    cursor = entry["index"]
                    payload = json.dumps(entry, sort_keys=True)
                    yield f"id: {entry['index']}\nevent: {entry['kind']}\ndata: {payload}\n\n"
                if not batch:
                    now = time.monotonic()
                    if now - last_beat >= 15.0:
                        last_beat = now
                        yield ": keep-alive\n\n"
                    time.sleep(POLL_INTERVAL)

        return StreamingResponse(generate(), media_type="text/event-stream")

    # -- lecturer controls -------------------------------------------------

    @app.post("/sessions/{sid}/advance")
    def advance(sid: str, x_lecturer_token: str | None = Header(default=None)) -> dict:
        require_lecturer(sid, x_lecturer_token)
        return store.apply(sid, "advance", {})

    @app.post("/sessions/{sid}/rounds/open")
    def open_round(
        sid: str, body: RoundBody, x_lecturer_token: str | None = Header(default=None)
    ) -> dict:
        require_lecturer(sid, x_lecturer_token)
        return store.apply(
            sid, "open_round", {"year": body.year, "round": body.round, "group_id": body.group_id}
        )

    @app.post("/sessions/{sid}/rounds/close")
    def close_round(
        sid: str, body: RoundBody, x_lecturer_token: str | None = Header(default=None)
    ) -> dict:
        require_lecturer(sid, x_lecturer_token)
        return store.apply(
            sid, "close_round", {"year": body.year, "round": body.round, "group_id": body.group_id}
        )

    @app.put("/sessions/{sid}/training-data")
    async def ingest_training(
        sid: str, request: Request, x_lecturer_token: str | None = Header(default=None)
    ) -> dict:
        require_lecturer(sid, x_lecturer_token)
        text = (await request.body()).decode("utf-8")
        return store.apply(sid, "ingest_training", {"csv": text})

    @app.get("/sessions/{sid}/state")
    def lecturer_state(sid: str, x_lecturer_token: str | None = Header(default=None)) -> dict:
        session = require_lecturer(sid, x_lecturer_token)
        with store.lock(sid):
            return session.lecturer_view()

    @app.get("/sessions/{sid}/export/{artifact}")
    def export(
        sid: str, artifact: str, x_lecturer_token: str | None = Header(default=None)
    ) -> PlainTextResponse:
        session = require_lecturer(sid, x_lecturer_token)
        with store.lock(sid):
            text = session.export(artifact)
        headers = {"Content-Disposition": f'attachment; filename="{sid}-{artifact}.csv"'}
        return PlainTextResponse(text, media_type="text/csv", headers=headers)

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/app", StaticFiles(directory=str(static_dir), html=True), name="app")

    return app
