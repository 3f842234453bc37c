"""Pupil-facing read API with teacher sharing policy enforced.

Stateless request handlers over a data directory: the session catalog and
event logs, the stroke store, and the excerpt store. Responses use the
canonical JSON encoding. The caller's role arrives in the X-Role header
(TEACHER or PUPIL; PUPIL when absent) as a stand-in for real
authentication. For pupils, any channel the teacher has not shared is
erased from every response before it leaves the server; session start/end
markers are kept since they carry no media.
"""

from __future__ import annotations

import logging
import re
from datetime import date, datetime, time, timedelta
from pathlib import Path
from typing import Optional
from zoneinfo import ZoneInfo

from fastapi import Depends, FastAPI, Header, HTTPException, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import FileResponse, JSONResponse

from . import codec
from .errors import UnknownSessionError, UnoteError
from .eventlog import LogStore
from .excerpts import ExcerptStore
from .model import CaptureEvent, Channel, EventKind, Role, Session, SharingPolicy
from .strokes import StrokeStore
from .temporal import (
    GAP_MERGE_MS,
    MediaStateSnapshot,
    SessionIndex,
    build_index,
    page_segment_hits,
    state_at,
    thumbnail_pages,
)
from .temporal import stroke_lookup as temporal_stroke_lookup

logger = logging.getLogger(__name__)

_CONTROL_KINDS = frozenset({EventKind.SESSION_STARTED, EventKind.SESSION_ENDED})
_SAFE_REF = re.compile(r"^[\w][\w.\-]*$")


class AccessContext:
    """Shared stores plus a per-session index cache keyed on log file size."""

    def __init__(self, data_dir: Path, tz: str = "UTC", gap_merge_ms: int = GAP_MERGE_MS):
        self.data_dir = Path(data_dir)
        self.logs = LogStore(self.data_dir)
        self.strokes = StrokeStore(self.data_dir)
        self.excerpts = ExcerptStore(self.data_dir)
        self.tz = ZoneInfo(tz)
        self.gap_merge_ms = gap_merge_ms
        self._index_cache: dict[str, tuple[int, SessionIndex]] = {}

    def session(self, session_id: str) -> Session:
        try:
            return self.logs.session(session_id)
        except UnknownSessionError:
            raise HTTPException(404, f"unknown session {session_id!r}") from None

    def index(self, session_id: str) -> SessionIndex:
        self.session(session_id)
        size = self.logs.log_path(session_id).stat().st_size if self.logs.log_path(session_id).exists() else 0
        cached = self._index_cache.get(session_id)
        if cached is not None and cached[0] == size:
            return cached[1]
        index = build_index(self.logs.read_all(session_id))
        self._index_cache[session_id] = (size, index)
        return index


def _role(x_role: Optional[str] = Header(default=None)) -> Role:
    if x_role is None:
        return Role.PUPIL
    try:
        return Role(x_role.upper())
    except ValueError:
        raise HTTPException(400, f"unknown role {x_role!r}") from None


def _visible(channel: Channel, role: Role, policy: SharingPolicy) -> bool:
    return role is Role.TEACHER or policy.is_shared(channel)


def filter_snapshot(snap: MediaStateSnapshot, role: Role, policy: SharingPolicy) -> MediaStateSnapshot:
    """Blank unshared channels for pupils; teachers see everything."""
    if role is Role.TEACHER:
        return snap
    return MediaStateSnapshot(
        at=snap.at,
        slides=snap.slides if policy.is_shared(Channel.SLIDES) else None,
        web=snap.web if policy.is_shared(Channel.WEB) else None,
        media=snap.media if policy.is_shared(Channel.MEDIA) else None,
        whiteboard_count=snap.whiteboard_count if policy.is_shared(Channel.WHITEBOARD) else 0,
        audio=snap.audio if policy.is_shared(Channel.AUDIO) else None,
    )


def filter_events(
    events: list[CaptureEvent], role: Role, policy: SharingPolicy
) -> list[CaptureEvent]:
    """Drop events of unshared channels for pupils; lifecycle markers stay."""
    if role is Role.TEACHER:
        return events
    return [
        e
        for e in events
        if e.kind in _CONTROL_KINDS or policy.is_shared(e.channel)
    ]


def _parse_date(value: str, param: str) -> date:
    try:
        return date.fromisoformat(value)
    except ValueError:
        raise HTTPException(400, f"malformed date {param}={value!r}") from None


def session_documents(index: SessionIndex) -> list[dict]:
    """Every media_ref the session touched, deduplicated, first-seen order."""
    docs: dict[tuple[str, str], dict] = {}

    def note(channel: Channel, ref: str, title: Optional[str]) -> None:
        key = (channel.value, ref)
        if key not in docs:
            docs[key] = {
                "channel": channel.value,
                "media_ref": ref,
                "title": title or ref,
                "asset": f"/assets/{ref}",
            }
        elif title and docs[key]["title"] == ref:
            docs[key]["title"] = title

    for e in index.events:
        if e.kind is EventKind.DOCUMENT_LOADED:
            note(e.channel, e.media_ref, e.title)
        elif e.kind in (EventKind.DOCUMENT_UNLOADED, EventKind.SLIDE_CHANGED):
            note(e.channel, e.media_ref, None)
        elif e.kind in (EventKind.MEDIA_PLAY, EventKind.MEDIA_PAUSE):
            note(e.channel, e.media_ref, None)
        elif e.kind is EventKind.WEB_NAVIGATED:
            note(e.channel, e.url, None)
        elif e.kind in (EventKind.AUDIO_STARTED, EventKind.AUDIO_STOPPED):
            note(e.channel, e.audio_ref, None)
        elif e.kind is EventKind.WHITEBOARD_STROKE_ADDED:
            note(e.channel, "whiteboard", "whiteboard capture")
    return list(docs.values())


def create_app(
    data_dir: Path,
    tz: str = "UTC",
    gap_merge_ms: int = GAP_MERGE_MS,
    ui_dir: Optional[Path] = None,
) -> FastAPI:
    app = FastAPI(title="unote access api", version="0.1.0")
    ctx = AccessContext(data_dir, tz=tz, gap_merge_ms=gap_merge_ms)
    app.state.ctx = ctx

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    @app.exception_handler(UnoteError)
    async def _domain_error(request: Request, exc: UnoteError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    # malformed query parameters are client errors, reported as 400
    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.get("/calendar")
    def calendar(
        from_: str = Query(alias="from"),
        to: str = Query(),
    ) -> dict:
        """Sessions intersecting the date range, grouped by (local) day."""
        d_from = _parse_date(from_, "from")
        d_to = _parse_date(to, "to")
        if d_from > d_to:
            raise HTTPException(400, "from is after to")
        days = []
        day = d_from
        while day <= d_to:
            day_start = int(datetime.combine(day, time(0), tzinfo=ctx.tz).timestamp() * 1000)
            day_end = int(
                datetime.combine(day + timedelta(days=1), time(0), tzinfo=ctx.tz).timestamp() * 1000
            )
            todays = [
                s
                for s in ctx.logs.sessions()
                if s.scheduled.start < day_end and day_start < s.scheduled.end
            ]
            if todays:
                days.append(
                    {
                        "date": day.isoformat(),
                        "sessions": [
                            {
                                "session_id": s.session_id,
                                "course_name": s.course_name,
                                "start": s.scheduled.start,
                                "end": s.scheduled.end,
                            }
                            for s in todays
                        ],
                    }
                )
            day += timedelta(days=1)
        return {"days": days}

    @app.get("/sessions/{session_id}/documents")
    def documents(session_id: str, role: Role = Depends(_role)) -> dict:
        session = ctx.session(session_id)
        index = ctx.index(session_id)
        docs = [
            d
            for d in session_documents(index)
            if _visible(Channel(d["channel"]), role, session.sharing)
        ]
        return {"session_id": session_id, "documents": docs}

    @app.get("/sessions/{session_id}/state")
    def state(session_id: str, at: int = Query(ge=0), role: Role = Depends(_role)) -> dict:
        session = ctx.session(session_id)
        snap = state_at(ctx.index(session_id), at)
        return filter_snapshot(snap, role, session.sharing).to_dict()

    @app.get("/sessions/{session_id}/events")
    def events(
        session_id: str,
        from_: Optional[int] = Query(default=None, alias="from"),
        to: Optional[int] = Query(default=None),
        limit: int = Query(default=1000, ge=1, le=10000),
        offset: int = Query(default=0, ge=0),
        role: Role = Depends(_role),
    ) -> dict:
        """Events with from < at <= to (half-open), policy filtered, paginated."""
        session = ctx.session(session_id)
        if from_ is not None and to is not None and from_ > to:
            raise HTTPException(400, "from is after to")
        index = ctx.index(session_id)
        selected = [
            e
            for e in index.events
            if (from_ is None or e.at > from_) and (to is None or e.at <= to)
        ]
        selected = filter_events(selected, role, session.sharing)
        window = selected[offset : offset + limit]
        return {
            "session_id": session_id,
            "total": len(selected),
            "offset": offset,
            "events": [codec.event_to_dict(e) for e in window],
        }

    @app.get("/notebooks/{notebook_id}/pages/{page}/strokes")
    def page_strokes(notebook_id: str, page: int) -> dict:
        """The pupil's own ink for one page, ordered by (start time, id)."""
        strokes = ctx.strokes.strokes_for_page(notebook_id, page)
        return {
            "notebook_id": notebook_id,
            "page": page,
            "strokes": [codec.stroke_to_dict(s) for s in strokes],
        }

    @app.get("/notebooks/{notebook_id}/pages/{page}/lookup")
    def page_lookup(
        notebook_id: str,
        page: int,
        x: float = Query(ge=0, lt=1),
        y: float = Query(ge=0, lt=1),
        radius: float = Query(default=0.02, gt=0),
    ) -> dict:
        """Tap resolution: nearest stroke sample within radius, or a miss."""
        strokes = ctx.strokes.strokes_for_page(notebook_id, page)
        hit = temporal_stroke_lookup(strokes, x, y, radius)
        if hit is None:
            return {"hit": None}
        stroke_id, at = hit
        return {"hit": {"stroke_id": stroke_id, "at": at}}

    @app.get("/notebooks/{notebook_id}/pages/{page}/segments")
    def page_segments(
        notebook_id: str, page: int, role: Role = Depends(_role)
    ) -> dict:
        """Thumbnail pages for one notebook page, across all indexed sessions.

        Policy filtering happens before chunking, so pupil tooltips never
        show blank slots where an unshared document would have been.
        """
        strokes = ctx.strokes.strokes_for_page(notebook_id, page)
        hits: list[tuple[int, dict]] = []
        for session in ctx.logs.sessions():
            index = ctx.index(session.session_id)
            for first, seg in page_segment_hits(index, strokes, ctx.gap_merge_ms):
                if not _visible(seg.channel, role, session.sharing):
                    continue
                entry = seg.to_dict()
                entry["session_id"] = session.session_id
                hits.append((first, entry))
        hits.sort(key=lambda pair: pair[0])
        ordered = [entry for _, entry in hits]
        return {
            "notebook_id": notebook_id,
            "page": page,
            "total_segments": len(ordered),
            "pages": thumbnail_pages(ordered),
        }

    @app.put("/sessions/{session_id}/sharing")
    def put_sharing(
        session_id: str, body: dict, role: Role = Depends(_role)
    ) -> dict:
        if role is not Role.TEACHER:
            raise HTTPException(403, "only the teacher can change sharing")
        session = ctx.session(session_id)
        try:
            sharing = codec.sharing_from_dict(body)
        except UnoteError as exc:
            raise HTTPException(400, str(exc)) from None
        updated = Session(
            session_id=session.session_id,
            course_name=session.course_name,
            teacher_id=session.teacher_id,
            scheduled=session.scheduled,
            sharing=sharing,
        )
        ctx.logs.register_session(updated)
        return {"session_id": session_id, "sharing": codec.sharing_to_dict(sharing)}

    @app.get("/assets/{ref}")
    def asset(ref: str):
        if not _SAFE_REF.match(ref):
            raise HTTPException(400, "bad asset reference")
        path = ctx.data_dir / "assets" / ref
        if not path.is_file():
            raise HTTPException(404, f"no asset {ref!r}")
        return FileResponse(path)

    return app
