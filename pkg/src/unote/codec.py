"""Canonical JSON encoding shared by the log file, wire protocol, and API.

Every domain type serializes to a flat JSON object with snake_case field
names; time instants serialize as integer milliseconds. Optional fields are
omitted when absent (never emitted as null). canonical_dumps produces one
deterministic byte representation per value: sorted keys, no whitespace.
"""

from __future__ import annotations

import json
from typing import Any

from .errors import CodecError
from .model import (
    CaptureEvent,
    Channel,
    EventKind,
    SharingPolicy,
    Session,
    Stroke,
    TimeInterval,
    validate_stroke,
)


def canonical_dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _require(d: dict, key: str, types, what: str):
    if key not in d:
        raise CodecError(f"{what}: missing field {key!r}")
    value = d[key]
    if not isinstance(value, types):
        raise CodecError(f"{what}: field {key!r} has wrong type {type(value).__name__}")
    return value


def _require_int(d: dict, key: str, what: str) -> int:
    value = _require(d, key, int, what)
    if isinstance(value, bool):
        raise CodecError(f"{what}: field {key!r} has wrong type bool")
    return value


# -- strokes ----------------------------------------------------------------

def stroke_to_dict(s: Stroke) -> dict:
    return {
        "stroke_id": s.stroke_id,
        "notebook_id": s.notebook_id,
        "page": s.page,
        "samples": [[x, y, t] for x, y, t in s.samples],
    }


def stroke_from_dict(d: Any) -> Stroke:
    if not isinstance(d, dict):
        raise CodecError("stroke: not a JSON object")
    raw = _require(d, "samples", list, "stroke")
    samples = []
    for i, item in enumerate(raw):
        if not (isinstance(item, list) and len(item) == 3):
            raise CodecError(f"stroke: sample {i} is not an [x, y, t] triple")
        x, y, t = item
        if not isinstance(x, (int, float)) or not isinstance(y, (int, float)):
            raise CodecError(f"stroke: sample {i} coordinates are not numbers")
        if not isinstance(t, int) or isinstance(t, bool):
            raise CodecError(f"stroke: sample {i} time is not an integer")
        samples.append((float(x), float(y), t))
    stroke = Stroke(
        stroke_id=_require(d, "stroke_id", str, "stroke"),
        notebook_id=_require(d, "notebook_id", str, "stroke"),
        page=_require_int(d, "page", "stroke"),
        samples=tuple(samples),
    )
    problem = validate_stroke(stroke)
    if problem is not None:
        raise CodecError(f"stroke: {problem}")
    return stroke


# -- capture events ---------------------------------------------------------

_EVENT_OPTIONAL_STR = ("media_ref", "title", "url", "audio_ref", "client_event_id")
_EVENT_OPTIONAL_INT = ("slide_index", "position_ms")


def event_to_dict(e: CaptureEvent) -> dict:
    d: dict[str, Any] = {
        "session_id": e.session_id,
        "channel": e.channel.value,
        "at": e.at,
        "kind": e.kind.value,
    }
    if e.seq is not None:
        d["seq"] = e.seq
    for name in _EVENT_OPTIONAL_STR + _EVENT_OPTIONAL_INT:
        value = getattr(e, name)
        if value is not None:
            d[name] = value
    if e.wb_stroke is not None:
        d["wb_stroke"] = stroke_to_dict(e.wb_stroke)
    return d


def event_from_dict(d: Any) -> CaptureEvent:
    if not isinstance(d, dict):
        raise CodecError("event: not a JSON object")
    channel_name = _require(d, "channel", str, "event")
    try:
        channel = Channel(channel_name)
    except ValueError:
        raise CodecError(f"event: unknown channel {channel_name!r}") from None
    kind_name = _require(d, "kind", str, "event")
    try:
        kind = EventKind(kind_name)
    except ValueError:
        raise CodecError(f"event: unknown kind {kind_name!r}") from None
    kwargs: dict[str, Any] = {}
    for name in _EVENT_OPTIONAL_STR:
        if name in d:
            if not isinstance(d[name], str):
                raise CodecError(f"event: field {name!r} must be a string")
            kwargs[name] = d[name]
    for name in _EVENT_OPTIONAL_INT:
        if name in d:
            kwargs[name] = _require_int(d, name, "event")
    if "wb_stroke" in d:
        kwargs["wb_stroke"] = stroke_from_dict(d["wb_stroke"])
    seq = _require_int(d, "seq", "event") if "seq" in d else None
    return CaptureEvent(
        session_id=_require(d, "session_id", str, "event"),
        channel=channel,
        at=_require_int(d, "at", "event"),
        kind=kind,
        seq=seq,
        **kwargs,
    )


def event_line(e: CaptureEvent) -> str:
    """One NDJSON line (newline included) for log files and wire frames."""
    return canonical_dumps(event_to_dict(e)) + "\n"


# -- sessions ---------------------------------------------------------------

def sharing_to_dict(p: SharingPolicy) -> dict:
    return {channel.value: p.shared[channel] for channel in Channel}


def sharing_from_dict(d: Any) -> SharingPolicy:
    if not isinstance(d, dict):
        raise CodecError("sharing policy: not a JSON object")
    shared: dict[Channel, bool] = {}
    for channel in Channel:
        if channel.value not in d:
            raise CodecError(f"sharing policy: missing channel {channel.value}")
        value = d[channel.value]
        if not isinstance(value, bool):
            raise CodecError(f"sharing policy: {channel.value} flag must be a boolean")
        shared[channel] = value
    unknown = set(d) - {channel.value for channel in Channel}
    if unknown:
        raise CodecError(f"sharing policy: unknown channels {sorted(unknown)}")
    return SharingPolicy(shared=shared)


def session_to_dict(s: Session) -> dict:
    return {
        "session_id": s.session_id,
        "course_name": s.course_name,
        "teacher_id": s.teacher_id,
        "scheduled_start": s.scheduled.start,
        "scheduled_end": s.scheduled.end,
        "sharing": sharing_to_dict(s.sharing),
    }


def session_from_dict(d: Any) -> Session:
    if not isinstance(d, dict):
        raise CodecError("session: not a JSON object")
    try:
        scheduled = TimeInterval(
            _require_int(d, "scheduled_start", "session"),
            _require_int(d, "scheduled_end", "session"),
        )
    except ValueError as exc:
        raise CodecError(f"session: {exc}") from None
    return Session(
        session_id=_require(d, "session_id", str, "session"),
        course_name=_require(d, "course_name", str, "session"),
        teacher_id=_require(d, "teacher_id", str, "session"),
        scheduled=scheduled,
        sharing=sharing_from_dict(_require(d, "sharing", dict, "session")),
    )
