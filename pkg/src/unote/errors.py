"""Exception hierarchy shared across the package."""


class UnoteError(Exception):
    """Base class for all domain errors raised by this package."""


class CodecError(UnoteError):
    """A JSON document does not match the canonical encoding of its type."""


class LogCorruptError(UnoteError):
    """An event log contains a bad record somewhere other than the tail."""

    def __init__(self, message: str, bad_seq: int | None = None):
        super().__init__(message)
        self.bad_seq = bad_seq


class UnknownSessionError(UnoteError):
    """An operation referenced a session that is not in the catalog."""


class ConflictError(UnoteError):
    """An import collided with existing data of different content."""


class StateError(UnoteError):
    """An operation is not legal in the object's current state."""
