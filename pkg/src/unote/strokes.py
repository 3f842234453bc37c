"""Pupil pen-dump ingest with clock correction, plus the stroke store.

A pen dump is the batch a pen uploads when plugged in: strokes carrying
pen-clock timestamps plus one sync point (pen clock and host clock read at
the same instant). The constant offset pen - host is subtracted from every
sample time on import, converting strokes to host time exactly. There is no
drift term: a fresh sync happens at every plug-in, and drift between
plug-ins is an accepted limitation.

Strokes persist as NDJSON per notebook (data_dir/notebooks/<id>.ndjson),
the same encoding and recovery path as the event logs.
"""

from __future__ import annotations

import logging
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from . import codec
from .errors import CodecError, ConflictError, UnoteError
from .eventlog import scan_complete_lines, _loads
from .model import PenClockModel, Stroke, validate_stroke

logger = logging.getLogger(__name__)

NOTEBOOKS_DIR = "notebooks"


@dataclass(frozen=True)
class PenDump:
    """One pen upload: sync point plus strokes in pen-clock time."""

    pen_id: str
    sync_pen_time: int
    sync_host_time: int
    strokes: tuple[Stroke, ...]


def clock_offset(dump: PenDump) -> int:
    """Pen minus host clock at the sync instant, in ms (signed, exact)."""
    return dump.sync_pen_time - dump.sync_host_time


def clock_model(dump: PenDump) -> PenClockModel:
    """The clock relation this plug-in establishes (a fresh one every sync)."""
    return PenClockModel(pen_id=dump.pen_id, offset_ms=clock_offset(dump))


def dump_to_dict(dump: PenDump) -> dict:
    return {
        "pen_id": dump.pen_id,
        "sync_pen_time": dump.sync_pen_time,
        "sync_host_time": dump.sync_host_time,
        "strokes": [codec.stroke_to_dict(s) for s in dump.strokes],
    }


def dump_from_dict(d: Any) -> PenDump:
    if not isinstance(d, dict):
        raise CodecError("pen dump: not a JSON object")
    for key in ("pen_id", "sync_pen_time", "sync_host_time", "strokes"):
        if key not in d:
            raise CodecError(f"pen dump: missing field {key!r}")
    if not isinstance(d["strokes"], list):
        raise CodecError("pen dump: strokes must be a list")
    strokes = tuple(codec.stroke_from_dict(s) for s in d["strokes"])
    dump = PenDump(
        pen_id=str(d["pen_id"]),
        sync_pen_time=int(d["sync_pen_time"]),
        sync_host_time=int(d["sync_host_time"]),
        strokes=strokes,
    )
    if dump.sync_pen_time < 0 or dump.sync_host_time < 0:
        raise CodecError("pen dump: sync times must be >= 0")
    return dump


class StrokeStore:
    """Host-time stroke storage, one NDJSON file per notebook.

    Single writer per store; imports are atomic with respect to concurrent
    readers (the in-memory view flips under the lock only after the dump is
    fully checked and written).
    """

    def __init__(self, data_dir: Path):
        self.dir = Path(data_dir) / NOTEBOOKS_DIR
        self.dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._by_id: dict[str, Stroke] = {}
        self._by_page: dict[tuple[str, int], list[Stroke]] = {}
        self._load()

    def _notebook_path(self, notebook_id: str) -> Path:
        return self.dir / f"{notebook_id}.ndjson"

    def _load(self) -> None:
        for path in sorted(self.dir.glob("*.ndjson")):
            data = path.read_bytes()
            lines, valid_len = scan_complete_lines(data)
            if valid_len != len(data):
                logger.warning("%s: dropping torn trailing stroke record", path.name)
                with open(path, "r+b") as fh:
                    fh.truncate(valid_len)
            for line in lines:
                self._index(codec.stroke_from_dict(_loads(line)))

    def _index(self, stroke: Stroke) -> None:
        self._by_id[stroke.stroke_id] = stroke
        self._by_page.setdefault((stroke.notebook_id, stroke.page), []).append(stroke)

    def import_dump(self, dump: PenDump) -> int:
        """Store the dump's strokes converted to host time; return count added.

        Dedup is by stroke_id: re-importing an identical dump adds nothing. A
        stroke whose id exists with different content rejects the whole dump
        atomically (nothing is written).
        """
        offset = clock_offset(dump)
        converted: list[Stroke] = []
        for stroke in dump.strokes:
            problem = validate_stroke(stroke)
            if problem is not None:
                raise UnoteError(f"invalid stroke {stroke.stroke_id!r}: {problem}")
            shifted = stroke.shifted(-offset)
            if shifted.start_time < 0:
                raise UnoteError(
                    f"stroke {stroke.stroke_id!r} converts to negative host time"
                )
            converted.append(shifted)
        with self._lock:
            fresh: list[Stroke] = []
            for stroke in converted:
                existing = self._by_id.get(stroke.stroke_id)
                if existing is None:
                    fresh.append(stroke)
                elif codec.stroke_to_dict(existing) != codec.stroke_to_dict(stroke):
                    raise ConflictError(
                        f"stroke {stroke.stroke_id!r} already stored with different content"
                    )
            by_notebook: dict[str, list[Stroke]] = {}
            for stroke in fresh:
                by_notebook.setdefault(stroke.notebook_id, []).append(stroke)
            for notebook_id, strokes in sorted(by_notebook.items()):
                with open(self._notebook_path(notebook_id), "a", encoding="utf-8") as fh:
                    for stroke in strokes:
                        fh.write(codec.canonical_dumps(codec.stroke_to_dict(stroke)) + "\n")
                    fh.flush()
                    os.fsync(fh.fileno())
            for stroke in fresh:
                self._index(stroke)
            return len(fresh)

    def add_stroke(self, stroke: Stroke) -> bool:
        """Store one host-time stroke directly (whiteboard mirror, tests)."""
        dump = PenDump(pen_id="direct", sync_pen_time=0, sync_host_time=0, strokes=(stroke,))
        return self.import_dump(dump) == 1

    def strokes_for_page(self, notebook_id: str, page: int) -> list[Stroke]:
        """All strokes of one page, ordered by (start time, stroke_id)."""
        with self._lock:
            strokes = list(self._by_page.get((notebook_id, page), []))
        strokes.sort(key=lambda s: (s.start_time, s.stroke_id))
        return strokes

    def notebooks(self) -> list[str]:
        with self._lock:
            return sorted({notebook_id for notebook_id, _ in self._by_page})

    def pages(self, notebook_id: str) -> list[int]:
        with self._lock:
            return sorted(
                page for nb, page in self._by_page if nb == notebook_id
            )

    def get(self, stroke_id: str) -> Stroke | None:
        with self._lock:
            return self._by_id.get(stroke_id)
