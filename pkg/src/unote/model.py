"""Shared domain vocabulary: time, channels, sessions, events, strokes, sharing.

Time instants are plain integers (milliseconds since the Unix epoch, UTC) so
clock arithmetic is exact and replays are bit-reproducible. Intervals are
half-open: [start, end). All values here are immutable after construction.

Page coordinates are normalized to [0, 1) per page. The nominal physical page
is A4 (210 x 297 mm); renderers that need aspect ratio should use that.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

#: Reserved notebook id for strokes drawn on the classroom whiteboard.
#: Whiteboard strokes reuse the pupil stroke model under this notebook.
WHITEBOARD_NOTEBOOK_ID = "whiteboard"


class Channel(str, Enum):
    """One independent media stream of the classroom."""

    SLIDES = "SLIDES"
    WEB = "WEB"
    MEDIA = "MEDIA"
    WHITEBOARD = "WHITEBOARD"
    AUDIO = "AUDIO"


class EventKind(str, Enum):
    """The closed vocabulary of things that can happen during a lesson."""

    SESSION_STARTED = "SessionStarted"
    SESSION_ENDED = "SessionEnded"
    DOCUMENT_LOADED = "DocumentLoaded"
    DOCUMENT_UNLOADED = "DocumentUnloaded"
    SLIDE_CHANGED = "SlideChanged"
    WEB_NAVIGATED = "WebNavigated"
    MEDIA_PLAY = "MediaPlay"
    MEDIA_PAUSE = "MediaPause"
    WHITEBOARD_STROKE_ADDED = "WhiteboardStrokeAdded"
    AUDIO_STARTED = "AudioStarted"
    AUDIO_STOPPED = "AudioStopped"


# Legal (channel, kind) pairings. Session lifecycle events are control events
# and are accepted on every channel. Document load/unload is legal on both
# SLIDES and MEDIA: the slide client and the media player each log
# load/unload of their own files. Everything else belongs to exactly one
# channel.
LEGAL_KINDS: dict[Channel, frozenset[EventKind]] = {
    Channel.SLIDES: frozenset(
        {
            EventKind.SESSION_STARTED,
            EventKind.SESSION_ENDED,
            EventKind.DOCUMENT_LOADED,
            EventKind.DOCUMENT_UNLOADED,
            EventKind.SLIDE_CHANGED,
        }
    ),
    Channel.WEB: frozenset(
        {
            EventKind.SESSION_STARTED,
            EventKind.SESSION_ENDED,
            EventKind.WEB_NAVIGATED,
        }
    ),
    Channel.MEDIA: frozenset(
        {
            EventKind.SESSION_STARTED,
            EventKind.SESSION_ENDED,
            EventKind.DOCUMENT_LOADED,
            EventKind.DOCUMENT_UNLOADED,
            EventKind.MEDIA_PLAY,
            EventKind.MEDIA_PAUSE,
        }
    ),
    Channel.WHITEBOARD: frozenset(
        {
            EventKind.SESSION_STARTED,
            EventKind.SESSION_ENDED,
            EventKind.WHITEBOARD_STROKE_ADDED,
        }
    ),
    Channel.AUDIO: frozenset(
        {
            EventKind.SESSION_STARTED,
            EventKind.SESSION_ENDED,
            EventKind.AUDIO_STARTED,
            EventKind.AUDIO_STOPPED,
        }
    ),
}

# Payload fields required by each kind; any payload field that is not listed
# for the event's kind must be absent.
REQUIRED_PAYLOAD: dict[EventKind, tuple[str, ...]] = {
    EventKind.SESSION_STARTED: (),
    EventKind.SESSION_ENDED: (),
    EventKind.DOCUMENT_LOADED: ("media_ref", "title"),
    EventKind.DOCUMENT_UNLOADED: ("media_ref",),
    EventKind.SLIDE_CHANGED: ("media_ref", "slide_index"),
    EventKind.WEB_NAVIGATED: ("url",),
    EventKind.MEDIA_PLAY: ("media_ref", "position_ms"),
    EventKind.MEDIA_PAUSE: ("media_ref", "position_ms"),
    EventKind.WHITEBOARD_STROKE_ADDED: ("wb_stroke",),
    EventKind.AUDIO_STARTED: ("audio_ref",),
    EventKind.AUDIO_STOPPED: ("audio_ref",),
}

_PAYLOAD_FIELDS = (
    "media_ref",
    "title",
    "slide_index",
    "url",
    "position_ms",
    "wb_stroke",
    "audio_ref",
)


@dataclass(frozen=True, order=True)
class TimeInterval:
    """Half-open interval [start, end) in epoch milliseconds."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start < 0:
            raise ValueError(f"interval start must be >= 0, got {self.start}")
        if self.end < self.start:
            raise ValueError(f"interval end {self.end} before start {self.start}")

    def contains(self, t: int) -> bool:
        return self.start <= t < self.end

    def intersects(self, other: "TimeInterval") -> bool:
        return self.start < other.end and other.start < self.end

    @property
    def empty(self) -> bool:
        return self.start == self.end


@dataclass(frozen=True)
class Stroke:
    """One pen trace: page identity plus timestamped point samples.

    Samples are (x, y, t) triples with x, y in [0, 1) and t an epoch-ms
    instant; sample times are non-decreasing. The stroke's own timestamp is
    the time of its first sample.
    """

    stroke_id: str
    notebook_id: str
    page: int
    samples: tuple[tuple[float, float, int], ...]

    @property
    def start_time(self) -> int:
        return self.samples[0][2]

    @property
    def end_time(self) -> int:
        return self.samples[-1][2]

    def shifted(self, delta_ms: int) -> "Stroke":
        """Copy with every sample time shifted by delta_ms (exact ints)."""
        moved = tuple((x, y, t + delta_ms) for x, y, t in self.samples)
        return replace(self, samples=moved)


def validate_stroke(s: Stroke) -> Optional[str]:
    """Return None if the stroke satisfies its invariants, else a description."""
    if not s.stroke_id:
        return "empty stroke_id"
    if not s.notebook_id:
        return "empty notebook_id"
    if s.page < 0:
        return f"negative page {s.page}"
    if not s.samples:
        return "stroke has no samples"
    prev_t = None
    for i, (x, y, t) in enumerate(s.samples):
        if not (0.0 <= x < 1.0 and 0.0 <= y < 1.0):
            return f"sample {i} coordinates ({x}, {y}) outside [0, 1)"
        if t < 0:
            return f"sample {i} time {t} negative"
        if prev_t is not None and t < prev_t:
            return f"sample {i} time {t} decreases from {prev_t}"
        prev_t = t
    return None


def stroke_time(s: Stroke) -> int:
    """Timestamp of a stroke: the time of its first sample."""
    return s.samples[0][2]


@dataclass(frozen=True)
class CaptureEvent:
    """One timestamped occurrence on a channel; the unit of the lesson log.

    The payload union is flattened: each kind requires its fields from
    REQUIRED_PAYLOAD and all other payload fields must be None. seq is
    assigned by the session log on append; events arriving from capture
    clients carry seq=None. client_event_id, when present, makes appends
    idempotent under client retries.
    """

    session_id: str
    channel: Channel
    at: int
    kind: EventKind
    seq: Optional[int] = None
    media_ref: Optional[str] = None
    title: Optional[str] = None
    slide_index: Optional[int] = None
    url: Optional[str] = None
    position_ms: Optional[int] = None
    wb_stroke: Optional[Stroke] = None
    audio_ref: Optional[str] = None
    client_event_id: Optional[str] = None


def validate_event(e: CaptureEvent) -> Optional[str]:
    """Return None if the event satisfies all invariants, else a description.

    Violations are return values, not exceptions: the capture server turns
    them into Err replies without tearing down the connection.
    """
    if not e.session_id:
        return "empty session_id"
    if not isinstance(e.channel, Channel):
        return f"unknown channel {e.channel!r}"
    if not isinstance(e.kind, EventKind):
        return f"unknown kind {e.kind!r}"
    if e.at < 0:
        return f"negative timestamp {e.at}"
    if e.seq is not None and e.seq < 1:
        return f"seq must be >= 1, got {e.seq}"
    if e.kind not in LEGAL_KINDS[e.channel]:
        return f"kind/channel mismatch: {e.kind.value} not legal on {e.channel.value}"
    required = REQUIRED_PAYLOAD[e.kind]
    for name in required:
        if getattr(e, name) is None:
            return f"{e.kind.value} requires payload field {name}"
    for name in _PAYLOAD_FIELDS:
        if name not in required and getattr(e, name) is not None:
            return f"{e.kind.value} does not take payload field {name}"
    if e.slide_index is not None and e.slide_index < 0:
        return f"negative slide_index {e.slide_index}"
    if e.position_ms is not None and e.position_ms < 0:
        return f"negative position {e.position_ms}"
    if e.wb_stroke is not None:
        problem = validate_stroke(e.wb_stroke)
        if problem is not None:
            return f"bad whiteboard stroke: {problem}"
        if e.wb_stroke.notebook_id != WHITEBOARD_NOTEBOOK_ID:
            return (
                "whiteboard stroke must use notebook_id "
                f"{WHITEBOARD_NOTEBOOK_ID!r}, got {e.wb_stroke.notebook_id!r}"
            )
    return None


@dataclass(frozen=True)
class SharingPolicy:
    """Teacher-controlled per-channel flag deciding what pupils may retrieve.

    Total over all five channels. The default shares everything except the
    whiteboard, so pupils still take their own notes off the board.
    """

    shared: dict[Channel, bool] = field(
        default_factory=lambda: {
            Channel.SLIDES: True,
            Channel.WEB: True,
            Channel.MEDIA: True,
            Channel.WHITEBOARD: False,
            Channel.AUDIO: True,
        }
    )

    def __post_init__(self) -> None:
        missing = [c.value for c in Channel if c not in self.shared]
        if missing:
            raise ValueError(f"sharing policy missing channels: {missing}")
        extra = [k for k in self.shared if not isinstance(k, Channel)]
        if extra:
            raise ValueError(f"sharing policy has unknown channels: {extra}")
        # detach from the caller's dict so the policy is truly immutable
        object.__setattr__(self, "shared", dict(self.shared))

    def is_shared(self, channel: Channel) -> bool:
        return self.shared[channel]

    def with_channel(self, channel: Channel, shared: bool) -> "SharingPolicy":
        updated = dict(self.shared)
        updated[channel] = shared
        return SharingPolicy(shared=updated)


@dataclass(frozen=True)
class Session:
    """One scheduled lecture and its sharing policy."""

    session_id: str
    course_name: str
    teacher_id: str
    scheduled: TimeInterval
    sharing: SharingPolicy = field(default_factory=SharingPolicy)

    def __post_init__(self) -> None:
        if not self.session_id:
            raise ValueError("empty session_id")


@dataclass(frozen=True)
class PenClockModel:
    """Pen/host clock relation established at a pen sync.

    offset_ms = pen_clock - host_clock at the sync instant. Subtracting the
    offset from pen-clock timestamps converts them to host time. Exact
    integer arithmetic; a fresh model is established at every plug-in.
    """

    pen_id: str
    offset_ms: int


class Role(str, Enum):
    """Access role carried by API requests."""

    TEACHER = "TEACHER"
    PUPIL = "PUPIL"


# Convenience constructors for the common event kinds; they keep call sites
# readable without widening the single flat event type.

def session_started(session_id: str, at: int, channel: Channel = Channel.SLIDES, **kw) -> CaptureEvent:
    return CaptureEvent(session_id, channel, at, EventKind.SESSION_STARTED, **kw)


def session_ended(session_id: str, at: int, channel: Channel = Channel.SLIDES, **kw) -> CaptureEvent:
    return CaptureEvent(session_id, channel, at, EventKind.SESSION_ENDED, **kw)


def document_loaded(session_id: str, channel: Channel, at: int, media_ref: str, title: str, **kw) -> CaptureEvent:
    return CaptureEvent(
        session_id, channel, at, EventKind.DOCUMENT_LOADED, media_ref=media_ref, title=title, **kw
    )


def document_unloaded(session_id: str, channel: Channel, at: int, media_ref: str, **kw) -> CaptureEvent:
    return CaptureEvent(
        session_id, channel, at, EventKind.DOCUMENT_UNLOADED, media_ref=media_ref, **kw
    )


def slide_changed(session_id: str, at: int, media_ref: str, slide_index: int, **kw) -> CaptureEvent:
    return CaptureEvent(
        session_id,
        Channel.SLIDES,
        at,
        EventKind.SLIDE_CHANGED,
        media_ref=media_ref,
        slide_index=slide_index,
        **kw,
    )


def web_navigated(session_id: str, at: int, url: str, **kw) -> CaptureEvent:
    return CaptureEvent(session_id, Channel.WEB, at, EventKind.WEB_NAVIGATED, url=url, **kw)


def media_play(session_id: str, at: int, media_ref: str, position_ms: int, **kw) -> CaptureEvent:
    return CaptureEvent(
        session_id, Channel.MEDIA, at, EventKind.MEDIA_PLAY, media_ref=media_ref, position_ms=position_ms, **kw
    )


def media_pause(session_id: str, at: int, media_ref: str, position_ms: int, **kw) -> CaptureEvent:
    return CaptureEvent(
        session_id, Channel.MEDIA, at, EventKind.MEDIA_PAUSE, media_ref=media_ref, position_ms=position_ms, **kw
    )


def whiteboard_stroke_added(session_id: str, at: int, wb_stroke: Stroke, **kw) -> CaptureEvent:
    return CaptureEvent(
        session_id, Channel.WHITEBOARD, at, EventKind.WHITEBOARD_STROKE_ADDED, wb_stroke=wb_stroke, **kw
    )


def audio_started(session_id: str, at: int, audio_ref: str, **kw) -> CaptureEvent:
    return CaptureEvent(session_id, Channel.AUDIO, at, EventKind.AUDIO_STARTED, audio_ref=audio_ref, **kw)


def audio_stopped(session_id: str, at: int, audio_ref: str, **kw) -> CaptureEvent:
    return CaptureEvent(session_id, Channel.AUDIO, at, EventKind.AUDIO_STOPPED, audio_ref=audio_ref, **kw)
