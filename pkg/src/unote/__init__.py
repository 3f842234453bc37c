"""Classroom capture-and-access pipeline.

Capture clients stream timestamped lesson events to a session server;
pupils' pen strokes are imported with clock correction; a temporal index
links any stroke to the exact media state of the class at that instant,
served through an HTTP access API and a deterministic replay engine.
"""

from .model import (
    CaptureEvent,
    Channel,
    EventKind,
    PenClockModel,
    Role,
    Session,
    SharingPolicy,
    Stroke,
    TimeInterval,
    stroke_time,
    validate_event,
    validate_stroke,
)
from .errors import (
    CodecError,
    ConflictError,
    LogCorruptError,
    StateError,
    UnknownSessionError,
    UnoteError,
)

__all__ = [
    "CaptureEvent",
    "Channel",
    "CodecError",
    "ConflictError",
    "EventKind",
    "LogCorruptError",
    "PenClockModel",
    "Role",
    "Session",
    "SharingPolicy",
    "StateError",
    "Stroke",
    "TimeInterval",
    "UnknownSessionError",
    "UnoteError",
    "stroke_time",
    "validate_event",
    "validate_stroke",
]

__version__ = "0.1.0"
