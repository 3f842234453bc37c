"""Capture server: receives classroom events from capture clients over TCP.

Wire protocol (both directions): one UTF-8 line per frame, terminated by
\\n, at most 64 KiB, containing canonical JSON.

    client -> server   {"hello": "capture/1", "session_id": ..., "client_id": ...}
    client -> server   canonical CaptureEvent (seq omitted; server assigns)
    client -> server   {"kind": "PostItCaptured", "source_url": ..., "region": {...},
                        "content_ref": ..., "captured_at": ...}
    server -> client   {"ack": seq}  or  {"err": "reason"}

The handshake is acked with the session's last assigned seq (0 for a fresh
log) so a reconnecting client knows where it stands. Post-it capture frames
are routed to the excerpt store and acked with that store's record count.
A malformed frame gets an Err reply and the connection stays open; an
oversize frame gets an Err reply and the connection is closed. Events
without a timestamp are stamped with the server clock on receipt.
"""

from __future__ import annotations

import json
import logging
import socket
import socketserver
import threading
import time
from typing import Any, Optional

from . import codec
from .errors import UnoteError
from .eventlog import LogStore

logger = logging.getLogger(__name__)

MAX_FRAME_BYTES = 64 * 1024
HELLO_PROTOCOL = "capture/1"


def _err(reason: str) -> bytes:
    return (codec.canonical_dumps({"err": reason}) + "\n").encode("utf-8")


def _ack(seq: int) -> bytes:
    return (codec.canonical_dumps({"ack": seq}) + "\n").encode("utf-8")


class _Handler(socketserver.StreamRequestHandler):
    server: "CaptureServer"

    def handle(self) -> None:
        peer = self.client_address
        logger.debug("connection from %s", peer)
        while True:
            line = self.rfile.readline(MAX_FRAME_BYTES + 1)
            if not line:
                return
            if len(line) > MAX_FRAME_BYTES or not line.endswith(b"\n"):
                if len(line) > MAX_FRAME_BYTES:
                    self.wfile.write(_err("frame too large"))
                return  # oversize or torn tail: close the connection
            reply = self.server.handle_frame(line)
            self.wfile.write(reply)
            self.wfile.flush()


class CaptureServer(socketserver.ThreadingTCPServer):
    """Threaded TCP capture server over a LogStore.

    Appends from all connections to one session are serialized by the
    session log's writer lock, so seq assignment is totally ordered.
    """

    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, listen: tuple[str, int], store: LogStore, excerpt_store=None, clock=None):
        super().__init__(listen, _Handler)
        self.store = store
        self.excerpt_store = excerpt_store
        self.clock = clock or (lambda: int(time.time() * 1000))

    @property
    def port(self) -> int:
        return self.server_address[1]

    def handle_frame(self, line: bytes) -> bytes:
        try:
            frame = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            return _err(f"malformed frame: {exc}")
        if not isinstance(frame, dict):
            return _err("malformed frame: not a JSON object")
        if "hello" in frame:
            return self._handle_hello(frame)
        if frame.get("kind") == "PostItCaptured":
            return self._handle_postit(frame)
        return self._handle_event(frame)

    def _handle_hello(self, frame: dict) -> bytes:
        session_id = frame.get("session_id")
        if not isinstance(session_id, str) or not self.store.has_session(session_id):
            return _err(f"unknown session {session_id!r}")
        log = self.store.log_for(session_id)
        return _ack(log.next_seq - 1)

    def _handle_event(self, frame: dict) -> bytes:
        if "at" not in frame:
            frame = {**frame, "at": self.clock()}
        try:
            event = codec.event_from_dict(frame)
        except UnoteError as exc:
            return _err(str(exc))
        if not self.store.has_session(event.session_id):
            return _err(f"unknown session {event.session_id!r}")
        try:
            seq = self.store.append(event)
        except UnoteError as exc:
            return _err(str(exc))
        return _ack(seq)

    def _handle_postit(self, frame: dict) -> bytes:
        if self.excerpt_store is None:
            return _err("no excerpt store configured")
        try:
            count = self.excerpt_store.capture_from_wire(frame)
        except UnoteError as exc:
            return _err(str(exc))
        return _ack(count)

    def serve_in_background(self) -> threading.Thread:
        thread = threading.Thread(
            target=self.serve_forever, kwargs={"poll_interval": 0.05}, daemon=True
        )
        thread.start()
        return thread


class CaptureClient:
    """Minimal wire-protocol client used by simulated capture tools and tests."""

    def __init__(self, host: str, port: int, session_id: str, client_id: str):
        self.session_id = session_id
        self.client_id = client_id
        self._sock = socket.create_connection((host, port))
        self._rfile = self._sock.makefile("rb")

    def _roundtrip(self, payload: dict) -> dict:
        data = (codec.canonical_dumps(payload) + "\n").encode("utf-8")
        self._sock.sendall(data)
        line = self._rfile.readline(MAX_FRAME_BYTES + 1)
        if not line:
            raise UnoteError("server closed the connection")
        return json.loads(line.decode("utf-8"))

    def send_raw(self, raw: bytes) -> Optional[dict]:
        self._sock.sendall(raw)
        line = self._rfile.readline(MAX_FRAME_BYTES + 1)
        if not line:
            return None
        return json.loads(line.decode("utf-8"))

    def hello(self) -> dict:
        return self._roundtrip(
            {"hello": HELLO_PROTOCOL, "session_id": self.session_id, "client_id": self.client_id}
        )

    def send_event(self, event) -> dict:
        return self._roundtrip(codec.event_to_dict(event))

    def send_frame(self, frame: dict) -> dict:
        return self._roundtrip(frame)

    def close(self) -> None:
        try:
            self._rfile.close()
        finally:
            self._sock.close()

    def __enter__(self) -> "CaptureClient":
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()
