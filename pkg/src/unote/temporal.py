"""Temporal index over a session's event stream.

Answers two questions the notebook UI is built on: "what was on each
channel at instant t" (state_at) and "which document parts were shown while
this page was being written" (segments_for_page). Storage is immutable
after build_index; rebuilds produce a new index.

Conventions, applied uniformly:
  * last event at time <= t wins (an event is already visible at its own
    timestamp; intervals are half-open [start, end)),
  * events with equal timestamps apply in seq order,
  * SessionEnded clears every channel locator and closes open segments;
    the whiteboard stroke count is a count, not a locator, and keeps
    counting past the end,
  * a MEDIA clip contributes segments only while playing; loaded or paused
    media appears in snapshots but not as a segment.
"""

from __future__ import annotations

import logging
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional

from .codec import canonical_dumps
from .errors import UnoteError
from .model import (
    CaptureEvent,
    Channel,
    EventKind,
    Stroke,
    TimeInterval,
    stroke_time,
)

logger = logging.getLogger(__name__)

#: Strokes closer than this gap belong to one writing episode of a page.
GAP_MERGE_MS = 30_000

#: Thumbnail tooltip capacity: this many document thumbnails fit at once.
THUMBNAILS_PER_PAGE = 6


@dataclass(frozen=True)
class Segment:
    """Maximal interval during which one locator was current on a channel."""

    channel: Channel
    interval: TimeInterval
    locator: dict[str, Any]

    @property
    def locator_key(self) -> tuple[str, str]:
        return (self.channel.value, canonical_dumps(self.locator))

    def to_dict(self) -> dict:
        return {
            "channel": self.channel.value,
            "start": self.interval.start,
            "end": self.interval.end,
            **self.locator,
        }


@dataclass(frozen=True)
class MediaStateSnapshot:
    """Per-channel state of the classroom at one instant."""

    at: int
    slides: Optional[tuple[str, int]] = None  # (media_ref, slide_index)
    web: Optional[str] = None  # url
    media: Optional[tuple[str, int, bool]] = None  # (media_ref, position_ms, playing)
    whiteboard_count: int = 0
    audio: Optional[tuple[str, int]] = None  # (audio_ref, offset_ms)

    def to_dict(self) -> dict:
        return {
            "at": self.at,
            "slides": None
            if self.slides is None
            else {"media_ref": self.slides[0], "slide_index": self.slides[1]},
            "web": None if self.web is None else {"url": self.web},
            "media": None
            if self.media is None
            else {
                "media_ref": self.media[0],
                "position_ms": self.media[1],
                "playing": self.media[2],
            },
            "whiteboard": {"stroke_count": self.whiteboard_count},
            "audio": None
            if self.audio is None
            else {"audio_ref": self.audio[0], "offset_ms": self.audio[1]},
        }


# Channel fold states. MEDIA playing is normalized to (ref, position - time)
# so that redundant play events on the same linear position line coalesce
# into one segment; AUDIO is normalized the same way via its start instant.

_EMPTY = None


class _ChannelFold:
    """Applies one channel's events in order; exposes snapshot + segment keys."""

    def __init__(self, channel: Channel):
        self.channel = channel
        # (ref, slide) | url | (ref, base, anchor, playing) | (ref, started_at)
        self.state: Any = _EMPTY

    def apply(self, e: CaptureEvent) -> None:
        kind = e.kind
        if kind is EventKind.SESSION_ENDED:
            self.state = _EMPTY
        elif kind is EventKind.SESSION_STARTED:
            pass
        elif self.channel is Channel.SLIDES:
            if kind is EventKind.DOCUMENT_LOADED:
                self.state = (e.media_ref, 0)
            elif kind is EventKind.SLIDE_CHANGED:
                self.state = (e.media_ref, e.slide_index)
            elif kind is EventKind.DOCUMENT_UNLOADED:
                if self.state is not _EMPTY and self.state[0] == e.media_ref:
                    self.state = _EMPTY
                else:
                    logger.warning("unload of %r ignored: deck not current", e.media_ref)
        elif self.channel is Channel.WEB:
            if kind is EventKind.WEB_NAVIGATED:
                self.state = e.url
        elif self.channel is Channel.MEDIA:
            if kind is EventKind.DOCUMENT_LOADED:
                self.state = (e.media_ref, 0, e.at, False)
            elif kind is EventKind.MEDIA_PLAY:
                self.state = (e.media_ref, e.position_ms, e.at, True)
            elif kind is EventKind.MEDIA_PAUSE:
                if self.state is not _EMPTY and self.state[0] == e.media_ref and self.state[3]:
                    self.state = (e.media_ref, e.position_ms, e.at, False)
                else:
                    logger.warning(
                        "pause of %r at %d ignored: no prior play", e.media_ref, e.at
                    )
            elif kind is EventKind.DOCUMENT_UNLOADED:
                if self.state is not _EMPTY and self.state[0] == e.media_ref:
                    self.state = _EMPTY
                else:
                    logger.warning("unload of %r ignored: clip not current", e.media_ref)
        elif self.channel is Channel.AUDIO:
            if kind is EventKind.AUDIO_STARTED:
                self.state = (e.audio_ref, e.at)
            elif kind is EventKind.AUDIO_STOPPED:
                if self.state is not _EMPTY and self.state[0] == e.audio_ref:
                    self.state = _EMPTY
                else:
                    logger.warning("stop of %r ignored: not recording", e.audio_ref)

    def segment_key(self) -> Any:
        """Hashable identity of the current locator; None when no segment is open.

        Time-dependent locators (playing media, running audio) are keyed by
        their position-minus-time invariant, so spans that continue the same
        linear playback line coalesce.
        """
        s = self.state
        if s is _EMPTY:
            return None
        if self.channel is Channel.SLIDES or self.channel is Channel.WEB:
            return s
        if self.channel is Channel.MEDIA:
            ref, base, anchor, playing = s
            if not playing:
                return None
            return (ref, base - anchor)
        if self.channel is Channel.AUDIO:
            ref, started_at = s
            return (ref, started_at)
        raise AssertionError(self.channel)


def _segment_locator(channel: Channel, key: Any, start: int, end: int) -> dict:
    if channel is Channel.SLIDES:
        return {"media_ref": key[0], "slide_index": key[1]}
    if channel is Channel.WEB:
        return {"url": key}
    if channel is Channel.MEDIA:
        ref, line = key
        return {"media_ref": ref, "clip_start": line + start, "clip_end": line + end}
    if channel is Channel.AUDIO:
        ref, started_at = key
        return {"audio_ref": ref, "clip_start": start - started_at, "clip_end": end - started_at}
    if channel is Channel.WHITEBOARD:
        return {"stroke_count": key}
    raise AssertionError(channel)


@dataclass
class SessionIndex:
    """Immutable query structure for one session; build with build_index."""

    session_id: str
    events: tuple[CaptureEvent, ...]
    segments: dict[Channel, tuple[Segment, ...]]
    span: TimeInterval  # first event time .. session end (inclusive bounds)
    _timeline_ats: dict[Channel, list[int]] = field(repr=False, default_factory=dict)
    _timeline_states: dict[Channel, list[Any]] = field(repr=False, default_factory=dict)
    _wb_times: list[int] = field(repr=False, default_factory=list)

    def all_segments(self) -> list[Segment]:
        out: list[Segment] = []
        for channel in Channel:
            out.extend(self.segments.get(channel, ()))
        out.sort(key=lambda s: (s.interval.start, s.channel.value))
        return out

    def state_at(self, t: int) -> MediaStateSnapshot:
        return state_at(self, t)


def _ordered(events: Iterable[CaptureEvent]) -> list[CaptureEvent]:
    events = list(events)
    if not events:
        return events
    session_id = events[0].session_id
    prev_seq = 0
    for e in events:
        if e.session_id != session_id:
            raise UnoteError(
                f"events from multiple sessions: {session_id!r} and {e.session_id!r}"
            )
        if e.seq is None or e.seq <= prev_seq:
            raise UnoteError(f"events not seq-ordered at seq {e.seq!r}")
        prev_seq = e.seq
    # timestamp order with seq as the tiebreaker is the replay order
    return sorted(events, key=lambda e: (e.at, e.seq))


def build_index(events: Iterable[CaptureEvent]) -> SessionIndex:
    """Fold a seq-ordered single-session event stream into a SessionIndex.

    Per channel, the segment list partitions exactly the spans where a
    locator was current; unterminated spans close at SessionEnded, or at the
    last event time if the log has no end marker.
    """
    ordered = _ordered(events)
    if not ordered:
        return SessionIndex("", (), {c: () for c in Channel}, TimeInterval(0, 0))
    session_id = ordered[0].session_id
    start = ordered[0].at
    ended = [e for e in ordered if e.kind is EventKind.SESSION_ENDED]
    end = ended[-1].at if ended else ordered[-1].at

    wb_times = sorted(
        stroke_time(e.wb_stroke)
        for e in ordered
        if e.kind is EventKind.WHITEBOARD_STROKE_ADDED
    )

    timeline_ats: dict[Channel, list[int]] = {c: [] for c in Channel}
    timeline_states: dict[Channel, list[Any]] = {c: [] for c in Channel}
    folds = {c: _ChannelFold(c) for c in Channel}
    segments: dict[Channel, list[Segment]] = {c: [] for c in Channel}
    open_spans: dict[Channel, Optional[tuple[int, Any]]] = {c: None for c in Channel}

    def close_span(channel: Channel, at: int) -> None:
        span = open_spans[channel]
        if span is None:
            return
        span_start, key = span
        open_spans[channel] = None
        span_end = min(at, end)
        if span_end <= span_start:
            return
        locator = _segment_locator(channel, key, span_start, span_end)
        segments[channel].append(
            Segment(channel, TimeInterval(span_start, span_end), locator)
        )

    for e in ordered:
        targets = list(Channel) if e.kind is EventKind.SESSION_ENDED else [e.channel]
        for channel in targets:
            fold = folds[channel]
            before = fold.segment_key()
            fold.apply(e)
            after = fold.segment_key()
            timeline_ats[channel].append(e.at)
            timeline_states[channel].append(fold.state)
            if after != before:
                close_span(channel, e.at)
                if after is not None and e.at < end:
                    open_spans[channel] = (e.at, after)
    for channel in Channel:
        close_span(channel, end)

    # Whiteboard segments come from stroke times: one per count plateau.
    wb_segments: list[Segment] = []
    boundaries = sorted(set(wb_times))
    for i, t in enumerate(boundaries):
        seg_start = t
        seg_end = boundaries[i + 1] if i + 1 < len(boundaries) else end
        seg_end = min(seg_end, end)
        if seg_end <= seg_start:
            continue
        count = bisect_right(wb_times, t)
        wb_segments.append(
            Segment(
                Channel.WHITEBOARD,
                TimeInterval(seg_start, seg_end),
                {"stroke_count": count},
            )
        )
    segments[Channel.WHITEBOARD] = wb_segments

    return SessionIndex(
        session_id=session_id,
        events=tuple(ordered),
        segments={c: tuple(segments[c]) for c in Channel},
        span=TimeInterval(start, end),
        _timeline_ats=timeline_ats,
        _timeline_states=timeline_states,
        _wb_times=wb_times,
    )


def state_at(idx: SessionIndex, t: int) -> MediaStateSnapshot:
    """Snapshot of every channel at instant t (last event at time <= t wins)."""

    def channel_state(channel: Channel) -> Any:
        ats = idx._timeline_ats.get(channel, [])
        pos = bisect_right(ats, t) - 1
        if pos < 0:
            return _EMPTY
        return idx._timeline_states[channel][pos]

    slides = channel_state(Channel.SLIDES)
    web = channel_state(Channel.WEB)
    media_state = channel_state(Channel.MEDIA)
    media = None
    if media_state is not _EMPTY:
        ref, base, anchor, playing = media_state
        position = base + (t - anchor) if playing else base
        media = (ref, max(position, 0), playing)
    audio_state = channel_state(Channel.AUDIO)
    audio = None
    if audio_state is not _EMPTY:
        ref, started_at = audio_state
        audio = (ref, t - started_at)
    return MediaStateSnapshot(
        at=t,
        slides=slides if slides is not _EMPTY else None,
        web=web if web is not _EMPTY else None,
        media=media,
        whiteboard_count=bisect_right(idx._wb_times, t),
        audio=audio,
    )


def page_writing_intervals(
    strokes: Iterable[Stroke], gap_merge_ms: int = GAP_MERGE_MS
) -> list[TimeInterval]:
    """Merge per-stroke spans into the page's writing episodes.

    Each stroke contributes [first_sample_t, last_sample_t + 1); spans that
    overlap or sit within gap_merge_ms of each other merge into one episode.
    Result is ordered and pairwise disjoint.
    """
    spans = sorted(
        (TimeInterval(s.start_time, s.end_time + 1) for s in strokes),
        key=lambda iv: (iv.start, iv.end),
    )
    merged: list[TimeInterval] = []
    for span in spans:
        if merged and span.start <= merged[-1].end + gap_merge_ms:
            if span.end > merged[-1].end:
                merged[-1] = TimeInterval(merged[-1].start, span.end)
        else:
            merged.append(span)
    return merged


def page_segment_hits(
    idx: SessionIndex,
    strokes: Iterable[Stroke],
    gap_merge_ms: int = GAP_MERGE_MS,
) -> list[tuple[int, Segment]]:
    """(first intersection time, segment) pairs for segments_for_page.

    Exposed separately so callers merging several sessions can keep the
    first-intersection ordering across them.
    """
    writing = page_writing_intervals(strokes, gap_merge_ms)
    if not writing:
        return []
    hits: list[tuple[int, int, str, str, Segment]] = []
    for channel in Channel:
        if channel is Channel.AUDIO:
            continue
        for seg in idx.segments.get(channel, ()):
            first = None
            for w in writing:
                if seg.interval.intersects(w):
                    first = max(seg.interval.start, w.start)
                    break
            if first is not None:
                hits.append(
                    (first, seg.interval.start, channel.value, canonical_dumps(seg.locator), seg)
                )
    hits.sort(key=lambda h: h[:4])
    seen: set[tuple[str, str]] = set()
    out: list[tuple[int, Segment]] = []
    for first, _, _, _, seg in hits:
        if seg.locator_key in seen:
            continue
        seen.add(seg.locator_key)
        out.append((first, seg))
    return out


def segments_for_page(
    idx: SessionIndex,
    strokes: Iterable[Stroke],
    gap_merge_ms: int = GAP_MERGE_MS,
) -> list[Segment]:
    """Segments shown while the page was being written, thumbnail-ready.

    Audio is excluded (it is reached through replay, not thumbnails). A
    locator seen twice keeps only its earliest segment. Order is by first
    intersection with the page's writing episodes.
    """
    return [seg for _, seg in page_segment_hits(idx, strokes, gap_merge_ms)]


def stroke_lookup(
    strokes: Iterable[Stroke], x: float, y: float, radius: float
) -> Optional[tuple[str, int]]:
    """Identify the stroke under a pen tap and the tapped sample's timestamp.

    Among samples within Euclidean distance <= radius of (x, y), the nearest
    wins; distance ties go to the earlier sample time, then the smaller
    stroke_id. None when nothing is in reach.
    """
    if radius <= 0:
        raise UnoteError(f"radius must be > 0, got {radius}")
    best: Optional[tuple[float, int, str]] = None
    r2 = radius * radius
    for stroke in strokes:
        for sx, sy, st in stroke.samples:
            d2 = (sx - x) ** 2 + (sy - y) ** 2
            if d2 > r2:
                continue
            key = (d2, st, stroke.stroke_id)
            if best is None or key < best:
                best = key
    if best is None:
        return None
    return (best[2], best[1])


def thumbnail_pages(segments: list, page_size: int = THUMBNAILS_PER_PAGE) -> list[list]:
    """Chunk an ordered segment list into tooltip pages of page_size slots."""
    if page_size < 1:
        raise UnoteError(f"page_size must be >= 1, got {page_size}")
    return [segments[i : i + page_size] for i in range(0, len(segments), page_size)]
