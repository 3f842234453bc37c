"""Append-only session event logs with crash recovery.

One NDJSON file per session, named <session_id>.ndjson, plus a
sessions.ndjson catalog of Session records (last record per session_id
wins, so catalog updates are appends too). Newline-delimited JSON keeps
recovery a line scan: a record is durable exactly when its full line,
including the trailing newline, reached the file.
"""

from __future__ import annotations

import json
import logging
import os
import threading
from dataclasses import replace
from pathlib import Path
from typing import Iterable, Optional

from . import codec
from .errors import LogCorruptError, UnknownSessionError, UnoteError
from .model import CaptureEvent, Session, validate_event

logger = logging.getLogger(__name__)

SESSIONS_CATALOG = "sessions.ndjson"

#: Upper bound on one record line, matching the wire frame limit.
MAX_RECORD_BYTES = 64 * 1024


def scan_complete_lines(data: bytes) -> tuple[list[bytes], int]:
    """Split a log file's bytes into complete lines.

    Returns (lines without terminator, byte length of the valid prefix).
    A trailing fragment without its newline is not a complete line.
    """
    lines: list[bytes] = []
    offset = 0
    while True:
        nl = data.find(b"\n", offset)
        if nl < 0:
            break
        lines.append(data[offset:nl])
        offset = nl + 1
    return lines, offset


def _loads(line: bytes):
    try:
        return json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise LogCorruptError(f"unparseable record: {exc}") from None


class SessionLog:
    """Append-only record file for a single session.

    Appends are serialized through an internal lock, so all appends to one
    session are linearizable regardless of how many server connections feed
    it. Records are flushed and fsynced before the assigned seq is returned;
    an acknowledged record survives recover(). Opening a file that ends in a
    torn record raises; use recover() for that.
    """

    def __init__(self, path: Path, session_id: str):
        self.path = Path(path)
        self.session_id = session_id
        self._lock = threading.Lock()
        self._by_client_id: dict[str, int] = {}
        self.next_seq = 1
        self._fh = None
        if not self.path.exists():
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.touch()
        for event in self._parse(self.path.read_bytes(), strict_tail=True):
            self._note(event)

    def _note(self, event: CaptureEvent) -> None:
        self.next_seq = (event.seq or 0) + 1
        if event.client_event_id is not None and event.seq is not None:
            self._by_client_id[event.client_event_id] = event.seq

    def _parse(self, data: bytes, strict_tail: bool) -> Iterable[CaptureEvent]:
        """Yield events from complete lines; reject corruption before the tail.

        strict_tail=False silently drops a torn final line (crash during a
        write). A bad line that is *not* last is unrecoverable corruption and
        raises LogCorruptError naming the first bad seq.
        """
        lines, valid_len = scan_complete_lines(data)
        torn_tail = valid_len != len(data)
        expected_seq = 1
        for line in lines:
            try:
                event = codec.event_from_dict(_loads(line))
            except UnoteError as exc:
                raise LogCorruptError(
                    f"{self.path.name}: bad record at seq {expected_seq}: {exc}",
                    bad_seq=expected_seq,
                ) from None
            if event.seq != expected_seq:
                raise LogCorruptError(
                    f"{self.path.name}: expected seq {expected_seq}, found {event.seq}",
                    bad_seq=expected_seq,
                )
            expected_seq += 1
            yield event
        if torn_tail and strict_tail:
            raise LogCorruptError(
                f"{self.path.name}: torn record at seq {expected_seq}",
                bad_seq=expected_seq,
            )

    def append(self, event: CaptureEvent) -> int:
        """Durably append one event, returning its assigned seq.

        Re-appending the same (session_id, client_event_id) is idempotent and
        returns the originally assigned seq without writing a second record.
        """
        if event.session_id != self.session_id:
            raise UnoteError(
                f"event session {event.session_id!r} does not match log {self.session_id!r}"
            )
        problem = validate_event(event)
        if problem is not None:
            raise UnoteError(f"invalid event: {problem}")
        with self._lock:
            if event.client_event_id is not None:
                known = self._by_client_id.get(event.client_event_id)
                if known is not None:
                    return known
            seq = self.next_seq
            record = codec.event_line(replace(event, seq=seq)).encode("utf-8")
            if len(record) > MAX_RECORD_BYTES:
                raise UnoteError(f"record too large ({len(record)} bytes)")
            if self._fh is None:
                self._fh = open(self.path, "ab")
            self._fh.write(record)
            self._fh.flush()
            os.fsync(self._fh.fileno())
            self.next_seq = seq + 1
            if event.client_event_id is not None:
                self._by_client_id[event.client_event_id] = seq
            return seq

    def read_all(self) -> list[CaptureEvent]:
        """All events in seq order, exactly as appended.

        Tolerates a torn final line (pre-recovery reads); corruption anywhere
        else raises LogCorruptError naming the first bad seq.
        """
        return list(self._parse(self.path.read_bytes(), strict_tail=False))

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def recover(path: Path, session_id: Optional[str] = None) -> SessionLog:
    """Open a log file that may end in a partial record (crashed writer).

    All complete records are retained; a trailing partial record is discarded
    and the file truncated to its last complete record, so the next append
    starts a clean line and next_seq continues from the last complete record.
    A bad record anywhere except the tail raises LogCorruptError.
    """
    path = Path(path)
    if session_id is None:
        session_id = path.name.removesuffix(".ndjson")
    if path.exists():
        data = path.read_bytes()
        probe = SessionLog.__new__(SessionLog)
        probe.path = path
        list(probe._parse(data, strict_tail=False))  # corruption check before truncating
        _, valid_len = scan_complete_lines(data)
        if valid_len != len(data):
            logger.warning(
                "%s: dropping %d bytes of torn trailing record",
                path.name,
                len(data) - valid_len,
            )
            with open(path, "r+b") as fh:
                fh.truncate(valid_len)
    return SessionLog(path, session_id)


class LogStore:
    """Directory of session logs plus the session catalog.

    Layout under data_dir:
        sessions.ndjson      catalog of Session records (last per id wins)
        <session_id>.ndjson  event log, one session each
    """

    def __init__(self, data_dir: Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._logs: dict[str, SessionLog] = {}
        self._sessions: dict[str, Session] = {}
        self._load_catalog()

    @property
    def catalog_path(self) -> Path:
        return self.data_dir / SESSIONS_CATALOG

    def _load_catalog(self) -> None:
        if not self.catalog_path.exists():
            return
        lines, _ = scan_complete_lines(self.catalog_path.read_bytes())
        for line in lines:
            session = codec.session_from_dict(_loads(line))
            self._sessions[session.session_id] = session

    def register_session(self, session: Session) -> None:
        """Add or replace a catalog entry (sharing updates come through here)."""
        with self._lock:
            line = codec.canonical_dumps(codec.session_to_dict(session)) + "\n"
            with open(self.catalog_path, "a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()
                os.fsync(fh.fileno())
            self._sessions[session.session_id] = session

    def sessions(self) -> list[Session]:
        with self._lock:
            return sorted(
                self._sessions.values(), key=lambda s: (s.scheduled.start, s.session_id)
            )

    def session(self, session_id: str) -> Session:
        with self._lock:
            try:
                return self._sessions[session_id]
            except KeyError:
                raise UnknownSessionError(f"unknown session {session_id!r}") from None

    def has_session(self, session_id: str) -> bool:
        with self._lock:
            return session_id in self._sessions

    def log_path(self, session_id: str) -> Path:
        return self.data_dir / f"{session_id}.ndjson"

    def log_for(self, session_id: str) -> SessionLog:
        """The (recovered) log for a registered session; one instance per id."""
        self.session(session_id)
        with self._lock:
            log = self._logs.get(session_id)
            if log is None:
                log = recover(self.log_path(session_id), session_id)
                self._logs[session_id] = log
            return log

    def append(self, event: CaptureEvent) -> int:
        return self.log_for(event.session_id).append(event)

    def read_all(self, session_id: str) -> list[CaptureEvent]:
        return self.log_for(session_id).read_all()

    def close(self) -> None:
        with self._lock:
            for log in self._logs.values():
                log.close()
            self._logs.clear()
