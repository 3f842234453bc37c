"""Seeded generator of synthetic lessons: teacher events plus pupil pen dumps.

Scenario shape, per lesson: a dictated introduction (pupil strokes only),
then slides, then a video that gets paused at least once for dictation,
then whiteboard diagrams that the pupil copies (each board stroke mirrored
by a pupil stroke a moment later). The generated pen dump carries pen-clock
timestamps (ground-truth host time plus a constant skew) and the sync point
needed to undo the skew on import.

Randomness comes from SplitMix64 used as a counter-based generator, with
independent substreams derived by hashing a label (FNV-1a 64) into the
seed. Identical profiles therefore produce byte-identical corpora on any
platform.

Teacher-side event timestamps land on whole seconds; per-second sampling of
the lesson therefore observes every channel-state boundary exactly. Pupil
stroke samples are not grid-aligned.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Optional

from . import codec, model
from .errors import UnoteError
from .eventlog import LogStore
from .model import CaptureEvent, Channel, EventKind, Session, SharingPolicy, Stroke, TimeInterval
from .strokes import PenDump, dump_to_dict
from .temporal import MediaStateSnapshot

logger = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1
MAX_SKEW_MS = 600_000  # ten minutes; larger pen skews are implausible


def _fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for byte in data:
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return h


def _mix(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class Rng:
    """SplitMix64 over an incrementing counter; split() derives substreams."""

    def __init__(self, seed: int):
        self._seed = seed & _MASK64
        self._counter = 0

    def split(self, label: str) -> "Rng":
        return Rng(_mix(self._seed ^ _fnv1a64(label.encode("utf-8"))))

    def next64(self) -> int:
        self._counter += 1
        return _mix((self._seed + self._counter * 0x9E3779B97F4A7C15) & _MASK64)

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi], inclusive."""
        if hi < lo:
            raise ValueError(f"empty range [{lo}, {hi}]")
        span = hi - lo + 1
        return lo + self.next64() % span

    def random(self) -> float:
        return (self.next64() >> 11) / float(1 << 53)

    def chance(self, p: float) -> bool:
        return self.random() < p

    def coord(self) -> float:
        """Page coordinate in [0, 1), quantized to 1/10000."""
        return self.randint(0, 9999) / 10000.0


@dataclass(frozen=True)
class SimProfile:
    """Knobs for one synthetic lesson; everything else derives from the seed."""

    seed: int
    duration_ms: int = 45 * 60_000
    channels: frozenset[Channel] = frozenset(Channel)
    slide_count: int = 8
    media_clip_count: int = 1
    media_clip_length_ms: int = 240_000
    strokes_per_page: int = 12
    pages: int = 3
    pen_skew_ms: int = 3_000
    pause_probability: float = 0.5

    def validate(self) -> None:
        if self.duration_ms <= 0:
            raise UnoteError("duration must be > 0")
        if self.duration_ms % 1000 != 0:
            raise UnoteError("lesson duration must be whole seconds")
        for name in ("slide_count", "media_clip_count", "strokes_per_page", "pages"):
            if getattr(self, name) < 0:
                raise UnoteError(f"{name} must be >= 0")
        if abs(self.pen_skew_ms) > MAX_SKEW_MS:
            raise UnoteError(f"pen skew beyond +/-{MAX_SKEW_MS} ms is implausible")
        if not 0.0 <= self.pause_probability <= 1.0:
            raise UnoteError("pause_probability must be in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "duration_ms": self.duration_ms,
            "channels": sorted(c.value for c in self.channels),
            "slide_count": self.slide_count,
            "media_clip_count": self.media_clip_count,
            "media_clip_length_ms": self.media_clip_length_ms,
            "strokes_per_page": self.strokes_per_page,
            "pages": self.pages,
            "pen_skew_ms": self.pen_skew_ms,
            "pause_probability": self.pause_probability,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimProfile":
        kwargs = dict(d)
        if "channels" in kwargs:
            kwargs["channels"] = frozenset(Channel(c) for c in kwargs["channels"])
        profile = cls(**kwargs)
        profile.validate()
        return profile


@dataclass(frozen=True)
class GroundTruth:
    """What the generator knows to be true, for oracle comparisons."""

    stroke_intervals: dict[str, tuple[int, int]]  # pupil stroke id -> host (first, last)
    snapshots: tuple[tuple[int, MediaStateSnapshot], ...]

    def to_dict(self) -> dict:
        return {
            "stroke_intervals": {
                sid: [a, b] for sid, (a, b) in sorted(self.stroke_intervals.items())
            },
            "snapshots": [[t, snap.to_dict()] for t, snap in self.snapshots],
        }


@dataclass(frozen=True)
class SimResult:
    session: Session
    events: tuple[CaptureEvent, ...]
    pen_dump: PenDump
    ground_truth: GroundTruth
    notebook_id: str


_COURSES = ("life-science", "history", "mathematics", "literature", "physics")


def lesson_state(events: Iterable[CaptureEvent], t: int) -> MediaStateSnapshot:
    """Naive forward replay of raw events up to t.

    Deliberately independent of the temporal index: this is the reference
    semantics ground truth is built from.
    """
    slides: Optional[tuple[str, int]] = None
    web: Optional[str] = None
    media: Optional[tuple[str, int, int, bool]] = None  # ref, base, anchor, playing
    audio: Optional[tuple[str, int]] = None
    wb = 0
    for e in sorted(events, key=lambda e: (e.at, e.seq or 0)):
        if e.at > t:
            break
        k = e.kind
        if k is EventKind.SESSION_ENDED:
            slides, web, media, audio = None, None, None, None
        elif k is EventKind.WHITEBOARD_STROKE_ADDED:
            if model.stroke_time(e.wb_stroke) <= t:
                wb += 1
        elif e.channel is Channel.SLIDES:
            if k is EventKind.DOCUMENT_LOADED:
                slides = (e.media_ref, 0)
            elif k is EventKind.SLIDE_CHANGED:
                slides = (e.media_ref, e.slide_index)
            elif k is EventKind.DOCUMENT_UNLOADED and slides and slides[0] == e.media_ref:
                slides = None
        elif e.channel is Channel.WEB:
            if k is EventKind.WEB_NAVIGATED:
                web = e.url
        elif e.channel is Channel.MEDIA:
            if k is EventKind.DOCUMENT_LOADED:
                media = (e.media_ref, 0, e.at, False)
            elif k is EventKind.MEDIA_PLAY:
                media = (e.media_ref, e.position_ms, e.at, True)
            elif k is EventKind.MEDIA_PAUSE:
                if media and media[0] == e.media_ref and media[3]:
                    media = (e.media_ref, e.position_ms, e.at, False)
            elif k is EventKind.DOCUMENT_UNLOADED and media and media[0] == e.media_ref:
                media = None
        elif e.channel is Channel.AUDIO:
            if k is EventKind.AUDIO_STARTED:
                audio = (e.audio_ref, e.at)
            elif k is EventKind.AUDIO_STOPPED and audio and audio[0] == e.audio_ref:
                audio = None
    media_out = None
    if media is not None:
        ref, base, anchor, playing = media
        media_out = (ref, base + (t - anchor) if playing else base, playing)
    audio_out = None if audio is None else (audio[0], t - audio[1])
    return MediaStateSnapshot(
        at=t, slides=slides, web=web, media=media_out, whiteboard_count=wb, audio=audio_out
    )


class _Lesson:
    """Accumulates the lesson under construction."""

    def __init__(self, profile: SimProfile):
        profile.validate()
        self.profile = profile
        self.rng = Rng(profile.seed)
        self.session_id = f"sim-{profile.seed:04d}"
        self.notebook_id = f"nb-{profile.seed:04d}"
        base = datetime(2011, 3, 7, 8, 0, tzinfo=timezone.utc)
        day = base + timedelta(days=profile.seed % 40, hours=profile.seed % 6)
        self.start = int(day.timestamp() * 1000)
        self.end = self.start + profile.duration_ms
        self.events: list[CaptureEvent] = []
        self.pupil_strokes: list[Stroke] = []
        self.wb_count = 0

    def grid(self, t: int) -> int:
        """Snap to the whole-second grid, clamped inside the lesson."""
        snapped = (t // 1000) * 1000
        return min(max(snapped, self.start), self.end)

    def add(self, event: CaptureEvent) -> None:
        self.events.append(event)

    def phase(self, lo_pct: int, hi_pct: int) -> tuple[int, int]:
        lo = self.grid(self.start + self.profile.duration_ms * lo_pct // 100)
        hi = self.grid(self.start + self.profile.duration_ms * hi_pct // 100)
        return lo, hi

    def make_stroke(self, rng: Rng, idx: int, start_t: int, page: int) -> Stroke:
        n_samples = rng.randint(2, 6)
        duration = rng.randint(800, 4000)
        times = sorted(rng.randint(0, duration) for _ in range(n_samples - 1))
        sample_times = [start_t] + [start_t + dt for dt in times]
        sample_times[-1] = start_t + duration
        sample_times.sort()
        x0, y0 = rng.coord() * 0.8, rng.coord()
        samples = tuple(
            (round(min(x0 + i * 0.02, 0.9999), 4), y0, st)
            for i, st in enumerate(sample_times)
        )
        return Stroke(
            stroke_id=f"stroke-{self.profile.seed:04d}-{idx:04d}",
            notebook_id=self.notebook_id,
            page=page,
            samples=samples,
        )


def generate(profile: SimProfile) -> SimResult:
    """Deterministically expand a profile into one full lesson."""
    lesson = _Lesson(profile)
    p = profile
    used = p.channels
    sid = lesson.session_id

    ev_rng = lesson.rng.split("events")
    stroke_rng = lesson.rng.split("strokes")

    lesson.add(model.session_started(sid, lesson.start))

    audio_ref = f"audio-{p.seed:04d}"
    if Channel.AUDIO in used:
        lesson.add(model.audio_started(sid, lesson.grid(lesson.start + 1000), audio_ref))

    # Slides phase: deck loads a quarter in, slides advance on a whole-second
    # cadence, deck stays up until the whiteboard phase takes over.
    slides_lo, slides_hi = lesson.phase(25, 50)
    deck_ref = f"deck-{p.seed:04d}.ppt"
    deck_loaded = False
    if Channel.SLIDES in used and p.slide_count > 0 and slides_hi > slides_lo:
        lesson.add(model.document_loaded(sid, Channel.SLIDES, slides_lo, deck_ref, "lesson deck"))
        deck_loaded = True
        span = slides_hi - slides_lo
        for i in range(p.slide_count):
            at = lesson.grid(slides_lo + span * i // max(p.slide_count, 1))
            if i == 0:
                at = slides_lo
            lesson.add(model.slide_changed(sid, at, deck_ref, i))

    if Channel.WEB in used and slides_hi > slides_lo:
        for i in range(ev_rng.randint(1, 3)):
            at = lesson.grid(slides_lo + ev_rng.randint(0, slides_hi - slides_lo))
            lesson.add(
                model.web_navigated(sid, at, f"http://school.example/{p.seed:04d}/page{i}")
            )

    # Video phase: play runs separated by dictation pauses; at least one
    # pause per clip is guaranteed.
    media_lo, media_hi = lesson.phase(50, 75)
    if Channel.MEDIA in used and p.media_clip_count > 0 and media_hi > media_lo:
        t = media_lo
        budget_per_clip = (media_hi - media_lo) // p.media_clip_count
        for clip_idx in range(p.media_clip_count):
            if t + 4000 > media_hi:
                break
            clip_ref = f"clip-{p.seed:04d}-{clip_idx}.mp4"
            clip_end_budget = min(media_hi, t + budget_per_clip)
            lesson.add(model.document_loaded(sid, Channel.MEDIA, t, clip_ref, f"clip {clip_idx}"))
            position = 0
            t = lesson.grid(t + 1000)
            pauses_left = 1 + (1 if ev_rng.chance(p.pause_probability) else 0)
            while t + 3000 <= clip_end_budget and position < p.media_clip_length_ms:
                run = lesson.grid(t + ev_rng.randint(10, 40) * 1000) - t
                run = min(run, clip_end_budget - 2000 - t, p.media_clip_length_ms - position)
                run = (run // 1000) * 1000
                if run < 1000:
                    break
                lesson.add(model.media_play(sid, t, clip_ref, position))
                t += run
                position += run
                lesson.add(model.media_pause(sid, t, clip_ref, position))
                pauses_left -= 1
                if pauses_left <= 0 and ev_rng.chance(0.6):
                    break
                t = lesson.grid(t + ev_rng.randint(5, 20) * 1000)  # dictation gap
            t = lesson.grid(min(clip_end_budget, media_hi))
            lesson.add(model.document_unloaded(sid, Channel.MEDIA, t, clip_ref))
            t = lesson.grid(t + 2000)

    # Whiteboard phase: the teacher draws, the pupil copies a beat later.
    wb_lo, wb_hi = lesson.phase(75, 95)
    mirror_times: list[int] = []
    if Channel.WHITEBOARD in used and wb_hi > wb_lo:
        if deck_loaded:
            lesson.add(model.document_unloaded(sid, Channel.SLIDES, wb_lo, deck_ref))
            deck_loaded = False
        wb_strokes = max(2, p.strokes_per_page // 2)
        span = wb_hi - wb_lo
        for i in range(wb_strokes):
            at = lesson.grid(wb_lo + span * i // wb_strokes)
            wb_stroke = Stroke(
                stroke_id=f"wb-{p.seed:04d}-{i:03d}",
                notebook_id=model.WHITEBOARD_NOTEBOOK_ID,
                page=0,
                samples=(
                    (stroke_rng.coord(), stroke_rng.coord(), at),
                    (stroke_rng.coord(), stroke_rng.coord(), at + stroke_rng.randint(100, 900)),
                ),
            )
            lesson.add(model.whiteboard_stroke_added(sid, at, wb_stroke))
            lesson.wb_count += 1
            mirror_times.append(at + stroke_rng.randint(1000, 3000))

    if Channel.AUDIO in used:
        lesson.add(model.audio_stopped(sid, lesson.grid(lesson.end - 2000), audio_ref))
    lesson.add(model.session_ended(sid, lesson.end))

    # Pupil strokes: the free budget spreads over dictation and the early
    # phases in time order; the tail mirrors the whiteboard diagrams. Pages
    # fill sequentially, strokes_per_page each.
    total = p.pages * p.strokes_per_page
    mirror_times = mirror_times[: total]
    free = total - len(mirror_times)
    intro_lo = lesson.grid(lesson.start + p.duration_ms * 5 // 100)
    free_hi = max(wb_lo - 5000, intro_lo + 1000)
    start_times = sorted(
        stroke_rng.randint(intro_lo, free_hi - 1) for _ in range(free)
    )
    start_times.extend(mirror_times)
    for idx, start_t in enumerate(start_times):
        page = min(idx // max(p.strokes_per_page, 1), max(p.pages - 1, 0))
        lesson.pupil_strokes.append(lesson.make_stroke(stroke_rng, idx, start_t, page))

    # sort by time (stable, so equal instants keep construction order), then
    # assign seq in replay order
    lesson.events.sort(key=lambda e: e.at)
    events = tuple(replace(e, seq=i + 1) for i, e in enumerate(lesson.events))

    skewed = tuple(s.shifted(p.pen_skew_ms) for s in lesson.pupil_strokes)
    sync_host = lesson.end + 30 * 60_000  # pupil plugs the pen in after class
    pen_dump = PenDump(
        pen_id=f"pen-{p.seed:04d}",
        sync_pen_time=sync_host + p.pen_skew_ms,
        sync_host_time=sync_host,
        strokes=skewed,
    )

    sample_rng = lesson.rng.split("sampling")
    sample_times = list(range(lesson.start, lesson.end + 1, 5000))
    sample_times.extend(
        sample_rng.randint(lesson.start, lesson.end) for _ in range(50)
    )
    snapshots = tuple(
        (t, lesson_state(events, t)) for t in sorted(set(sample_times))
    )
    ground_truth = GroundTruth(
        stroke_intervals={
            s.stroke_id: (s.start_time, s.end_time) for s in lesson.pupil_strokes
        },
        snapshots=snapshots,
    )

    session = Session(
        session_id=sid,
        course_name=_COURSES[p.seed % len(_COURSES)],
        teacher_id=f"teacher-{p.seed % 7:02d}",
        scheduled=TimeInterval(lesson.start, lesson.end),
        sharing=SharingPolicy(),
    )
    return SimResult(
        session=session,
        events=events,
        pen_dump=pen_dump,
        ground_truth=ground_truth,
        notebook_id=lesson.notebook_id,
    )


def emit(result: SimResult, out_dir: Path) -> dict[str, str]:
    """Write the lesson in the production file formats; returns paths written.

    The event log is written through the real append path, so the file is
    exactly what a capture server would have produced.
    """
    out_dir = Path(out_dir)
    store = LogStore(out_dir)
    store.register_session(result.session)
    log = store.log_for(result.session.session_id)
    if log.next_seq != 1:
        raise UnoteError(f"session log for {result.session.session_id} is not empty")
    for event in result.events:
        log.append(event)
    store.close()

    dump_path = out_dir / f"pendump-{result.pen_dump.pen_id}.json"
    dump_path.write_text(codec.canonical_dumps(dump_to_dict(result.pen_dump)) + "\n")

    truth_path = out_dir / f"ground-truth-{result.session.session_id}.json"
    truth_path.write_text(codec.canonical_dumps(result.ground_truth.to_dict()) + "\n")

    return {
        "sessions": str(store.catalog_path),
        "log": str(store.log_path(result.session.session_id)),
        "pen_dump": str(dump_path),
        "ground_truth": str(truth_path),
    }
