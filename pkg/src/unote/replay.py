"""Deterministic class replay: a controllable virtual clock over the log.

The engine is pull-based: a controller calls tick(wall_elapsed_ms) and gets
back the new virtual time, the log events that fell inside the advance, the
red-dot cursor, and the visible/grayed stroke partition. All clock math is
integer milliseconds; speed multiplication floors, with the fractional
remainder carried in an accumulator so tick(a) then tick(b) lands on
exactly the same instant as tick(a+b). Replays are therefore reproducible
bit-for-bit across runs and platforms.

The red dot holds the last written position between strokes rather than
jumping ahead to the next one, so the replay never foreshadows what has not
been "written" yet.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .codec import event_to_dict
from .errors import UnoteError
from .model import CaptureEvent, Stroke
from .temporal import MediaStateSnapshot, SessionIndex, state_at

Sample = tuple[float, float, int]


@dataclass(frozen=True)
class Cursor:
    """Red-dot position on a notebook page, tied to its source stroke."""

    notebook_id: str
    page: int
    x: float
    y: float
    stroke_id: str

    def to_dict(self) -> dict:
        return {
            "notebook_id": self.notebook_id,
            "page": self.page,
            "x": self.x,
            "y": self.y,
            "stroke_id": self.stroke_id,
        }


@dataclass(frozen=True)
class GrayPartition:
    """Sample-granular split of a page at a virtual time.

    visible holds each stroke's prefix written at or before t; grayed holds
    the rest. Their union is every sample of the page, disjoint.
    """

    visible: tuple[tuple[str, tuple[Sample, ...]], ...]
    grayed: tuple[tuple[str, tuple[Sample, ...]], ...]

    def summary(self) -> dict:
        """Compact canonical form: fully grayed ids + visible-prefix lengths
        of straddling strokes (strokes fully visible are implied)."""
        grayed_by_id = {sid: len(samples) for sid, samples in self.grayed}
        visible_by_id = {sid: len(samples) for sid, samples in self.visible}
        fully_grayed = sorted(sid for sid in grayed_by_id if sid not in visible_by_id)
        splits = {
            sid: visible_by_id[sid]
            for sid in sorted(visible_by_id)
            if sid in grayed_by_id
        }
        return {"fully_grayed": fully_grayed, "splits": splits}


def cursor_at(strokes: Iterable[Stroke], t: int) -> Optional[Cursor]:
    """Red-dot position at virtual time t, or None before any writing.

    The source stroke is the one holding the latest sample at time <= t;
    when several strokes share that instant the most recently started one
    (greatest (start_time, stroke_id)) is current. Within the stroke the
    position interpolates linearly between the surrounding samples as
    x1 + (t - t1) / (t2 - t1) * (x2 - x1), and holds the final sample once
    the stroke is finished.
    """
    best: Optional[tuple[int, int, str, Stroke, int]] = None
    for stroke in strokes:
        times = [s[2] for s in stroke.samples]
        pos = bisect_right(times, t) - 1
        if pos < 0:
            continue
        key = (times[pos], stroke.start_time, stroke.stroke_id)
        if best is None or key > (best[0], best[1], best[2]):
            best = (times[pos], stroke.start_time, stroke.stroke_id, stroke, pos)
    if best is None:
        return None
    _, _, _, stroke, i = best
    x1, y1, t1 = stroke.samples[i]
    if i + 1 < len(stroke.samples) and t > t1:
        x2, y2, t2 = stroke.samples[i + 1]
        frac_num = t - t1
        frac_den = t2 - t1
        x = x1 + frac_num / frac_den * (x2 - x1)
        y = y1 + frac_num / frac_den * (y2 - y1)
    else:
        x, y = x1, y1
    return Cursor(stroke.notebook_id, stroke.page, x, y, stroke.stroke_id)


def gray_partition(strokes: Iterable[Stroke], t: int) -> GrayPartition:
    """Split samples at sample granularity: time <= t visible, later grayed."""
    visible: list[tuple[str, tuple[Sample, ...]]] = []
    grayed: list[tuple[str, tuple[Sample, ...]]] = []
    ordered = sorted(strokes, key=lambda s: (s.start_time, s.stroke_id))
    for stroke in ordered:
        times = [s[2] for s in stroke.samples]
        cut = bisect_right(times, t)
        if cut > 0:
            visible.append((stroke.stroke_id, stroke.samples[:cut]))
        if cut < len(stroke.samples):
            grayed.append((stroke.stroke_id, stroke.samples[cut:]))
    return GrayPartition(visible=tuple(visible), grayed=tuple(grayed))


class ReplayState(str, Enum):
    PLAYING = "PLAYING"
    PAUSED = "PAUSED"


@dataclass(frozen=True)
class TickResult:
    virtual_time: int
    events: tuple[CaptureEvent, ...]
    cursor: Optional[Cursor]
    gray: GrayPartition
    state: MediaStateSnapshot

    def to_dict(self) -> dict:
        return {
            "virtual_time": self.virtual_time,
            "events": [event_to_dict(e) for e in self.events],
            "cursor": None if self.cursor is None else self.cursor.to_dict(),
            "gray": self.gray.summary(),
            "state": self.state.to_dict(),
        }


class ReplaySession:
    """Single-owner replay controller for one session and one notebook page.

    One controller mutates the session; tick outputs are immutable values
    safe to hand to renderers. Reaching the session end pauses the replay.
    """

    def __init__(
        self,
        index: SessionIndex,
        strokes: Sequence[Stroke] = (),
        speed: Fraction = Fraction(1),
        start_at: Optional[int] = None,
    ):
        self.index = index
        self.strokes = tuple(sorted(strokes, key=lambda s: (s.start_time, s.stroke_id)))
        self._event_ats = [e.at for e in index.events]
        self.state = ReplayState.PAUSED
        self.virtual_time = index.span.start
        self._residual = Fraction(0)
        # The first advancing tick after a seek replays the seek instant
        # itself ([old, new] instead of (old, new]); otherwise an event at
        # exactly the session start could never be emitted.
        self._replay_current = True
        self.speed = Fraction(1)
        self.set_speed(speed)
        if start_at is not None:
            self.seek(start_at)

    def set_speed(self, speed: Fraction) -> None:
        speed = Fraction(speed)
        if speed <= 0:
            raise UnoteError(f"replay speed must be > 0, got {speed}")
        self.speed = speed

    def play(self) -> None:
        self.state = ReplayState.PLAYING

    def pause(self) -> None:
        self.state = ReplayState.PAUSED

    def seek(self, t: int) -> int:
        """Jump the virtual clock to t, clamped to the session span.

        Clamping at the far end pauses the replay; otherwise the play/pause
        state is unchanged. The fractional-ms accumulator resets.
        """
        start, end = self.index.span.start, self.index.span.end
        clamped = min(max(t, start), end)
        if t > end:
            self.state = ReplayState.PAUSED
        self.virtual_time = clamped
        self._residual = Fraction(0)
        self._replay_current = True
        return clamped

    def tick(self, wall_elapsed_ms: int) -> TickResult:
        """Advance by wall_elapsed_ms of wall time and report what happened.

        While playing, virtual time advances by wall_elapsed_ms * speed
        (floored to integer ms, remainder accumulated). The emitted events
        are those with old < at <= new, in (at, seq) order; the first
        advancing tick after a seek widens that to old <= at <= new so the
        seek instant itself is replayed. Paused ticks emit nothing.
        """
        if wall_elapsed_ms < 0:
            raise UnoteError(f"elapsed time must be >= 0, got {wall_elapsed_ms}")
        old = self.virtual_time
        if self.state is ReplayState.PLAYING and wall_elapsed_ms > 0:
            advance = wall_elapsed_ms * self.speed + self._residual
            whole = int(advance)  # floor: advance is >= 0
            self._residual = advance - whole
            new = old + whole
            if new >= self.index.span.end:
                new = self.index.span.end
                self.state = ReplayState.PAUSED
                self._residual = Fraction(0)
            self.virtual_time = new
        else:
            new = old
        if new > old:
            lo_bisect = bisect_left if self._replay_current else bisect_right
            lo = lo_bisect(self._event_ats, old)
            hi = bisect_right(self._event_ats, new)
            events = self.index.events[lo:hi]
            self._replay_current = False
        else:
            events = ()
        return TickResult(
            virtual_time=new,
            events=events,
            cursor=cursor_at(self.strokes, new),
            gray=gray_partition(self.strokes, new),
            state=state_at(self.index, new),
        )
