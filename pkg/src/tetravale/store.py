"""Single-directory persistence: one append-only JSONL log per session.

The log is the source of truth; loading a session replays it from genesis.
Snapshots are written at phase advances purely for humans poking around the
data directory, never read back by the program.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from pathlib import Path

from .errors import NotFoundError, ValidationError
from .session import DEFAULT_ROUND_SECONDS, Session


class SessionStore:
    """Owns the data directory and the in-memory session cache."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def _log_path(self, session_id: str) -> Path:
        return self.root / f"{session_id}.events.jsonl"

    def _snapshot_path(self, session_id: str) -> Path:
        return self.root / f"{session_id}.snapshot.json"

    def lock(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(session_id, threading.Lock())

    def list_sessions(self) -> list[str]:
        return sorted(p.name.removesuffix(".events.jsonl") for p in self.root.glob("*.events.jsonl"))

    def create(
        self,
        class_size: int,
        seed: int,
        round_seconds: int = DEFAULT_ROUND_SECONDS,
        session_id: str | None = None,
    ) -> tuple[Session, dict]:
        """Create, persist, and cache a new session; returns (session, create result)."""
        sid = session_id or uuid.uuid4().hex[:8]
        if not sid.replace("-", "").replace("_", "").isalnum():
            raise ValidationError(f"session id must be a filename-safe slug, got {sid!r}")
        with self.lock(sid):
            path = self._log_path(sid)
            if path.exists() or sid in self._sessions:
                raise ValidationError(f"session {sid!r} already exists")
            session = Session.create(sid, class_size, seed, round_seconds)
            with path.open("w", encoding="utf-8") as fh:
                for record in session.events:
                    fh.write(self._line(record))
            self._sessions[sid] = session
            result = {
                "session_id": sid,
                "lecturer_token": session.lecturer_token,
                "join_codes": list(session.codes),
                "groups": {
                    gid: [c for c in session.codes if session.code_group[c] == gid]
                    for gid in session.engine.group_ids
                },
            }
            return session, result

    def get(self, session_id: str) -> Session:
        session = self._sessions.get(session_id)
        if session is not None:
            return session
        path = self._log_path(session_id)
        if not path.exists():
            raise NotFoundError(f"unknown session: {session_id!r}")
        session = self.load_events(self.read_log(session_id))
        self._sessions[session_id] = session
        return session

    def read_log(self, session_id: str) -> list[dict]:
        path = self._log_path(session_id)
        if not path.exists():
            raise NotFoundError(f"unknown session: {session_id!r}")
        records = []
        with path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    records.append(json.loads(line))
        return records

    @staticmethod
    def load_events(records: list[dict]) -> Session:
        return Session.replay(records)

    def apply(self, session_id: str, kind: str, args: dict) -> dict:
        """Run one command under the session lock and persist its event."""
        with self.lock(session_id):
            session = self.get(session_id)
            result = session.apply(kind, args)
            record = session.events[-1]
            with self._log_path(session_id).open("a", encoding="utf-8") as fh:
                fh.write(self._line(record))
            if kind == "advance":
                self._write_snapshot(session)
            return result

    @staticmethod
    def _line(record: dict) -> str:
        # "at" is observability metadata; replay never reads it.
        enriched = {**record, "at": time.time()}
        return json.dumps(enriched, sort_keys=True, separators=(",", ":")) + "\n"

    def _write_snapshot(self, session: Session) -> None:
        payload = json.dumps(session.snapshot(), sort_keys=True, indent=2)
        self._snapshot_path(session.session_id).write_text(payload + "\n", encoding="utf-8")
