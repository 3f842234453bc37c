"""Digital post-it excerpts and printed-excerpt coordinate mappings.

A post-it is a clipped document excerpt. While ACTIVE it floats, stays
interactive and may be re-cropped; once STUCK to a notebook page it is
frozen (position, size, content) until unstuck. The store records state
transitions as appended NDJSON records, last record per id winning, so the
event-log recovery path applies here too.

Print mappings allocate virtual dot-pattern pages to printed documents.
Virtual page ids are never reused, and lookups key on (page, point) rather
than the physical sheet, which is what keeps excerpts tappable after the
paper is physically cut apart.
"""

from __future__ import annotations

import logging
import os
import threading
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Optional

from .codec import canonical_dumps
from .errors import CodecError, StateError, UnoteError
from .eventlog import scan_complete_lines, _loads

logger = logging.getLogger(__name__)

EXCERPTS_FILE = "excerpts.ndjson"


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle in normalized page coordinates.

    Covers [x, x+w) x [y, y+h); must lie inside the unit page and have
    positive area.
    """

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.x < 1.0 and 0.0 <= self.y < 1.0):
            raise ValueError(f"rect origin ({self.x}, {self.y}) outside [0, 1)")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"rect has empty extent {self.w} x {self.h}")
        if self.x + self.w > 1.0 or self.y + self.h > 1.0:
            raise ValueError("rect extends past the page edge")

    def contains(self, px: float, py: float) -> bool:
        return self.x <= px < self.x + self.w and self.y <= py < self.y + self.h

    @property
    def area(self) -> float:
        return self.w * self.h

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "w": self.w, "h": self.h}

    @classmethod
    def from_dict(cls, d: Any) -> "Rect":
        if not isinstance(d, dict):
            raise CodecError("rect: not a JSON object")
        try:
            return cls(float(d["x"]), float(d["y"]), float(d["w"]), float(d["h"]))
        except KeyError as exc:
            raise CodecError(f"rect: missing field {exc}") from None
        except (TypeError, ValueError) as exc:
            raise CodecError(f"rect: {exc}") from None


class PostItState(str, Enum):
    ACTIVE = "ACTIVE"
    STUCK = "STUCK"


@dataclass(frozen=True)
class PostIt:
    """A captured document excerpt, floating or anchored to a notebook page."""

    postit_id: str
    source_url: str
    source_region: Rect
    content_ref: str
    captured_at: int
    state: PostItState = PostItState.ACTIVE
    notebook_id: Optional[str] = None
    page: Optional[int] = None
    rect: Optional[Rect] = None

    def to_dict(self) -> dict:
        d: dict[str, Any] = {
            "postit_id": self.postit_id,
            "source_url": self.source_url,
            "source_region": self.source_region.to_dict(),
            "content_ref": self.content_ref,
            "captured_at": self.captured_at,
            "state": self.state.value,
        }
        if self.state is PostItState.STUCK:
            d["notebook_id"] = self.notebook_id
            d["page"] = self.page
            d["rect"] = self.rect.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PostIt":
        state = PostItState(d["state"])
        return cls(
            postit_id=d["postit_id"],
            source_url=d["source_url"],
            source_region=Rect.from_dict(d["source_region"]),
            content_ref=d["content_ref"],
            captured_at=int(d["captured_at"]),
            state=state,
            notebook_id=d.get("notebook_id"),
            page=d.get("page"),
            rect=Rect.from_dict(d["rect"]) if state is PostItState.STUCK else None,
        )


@dataclass(frozen=True)
class Anchor:
    """Region of one virtual printed page mapped back to its source document."""

    virtual_page_id: int
    rect: Rect
    doc_page: int
    doc_region: Rect

    def to_dict(self) -> dict:
        return {
            "virtual_page_id": self.virtual_page_id,
            "rect": self.rect.to_dict(),
            "doc_page": self.doc_page,
            "doc_region": self.doc_region.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Anchor":
        return cls(
            virtual_page_id=int(d["virtual_page_id"]),
            rect=Rect.from_dict(d["rect"]),
            doc_page=int(d["doc_page"]),
            doc_region=Rect.from_dict(d["doc_region"]),
        )


@dataclass(frozen=True)
class PrintMapping:
    """Allocation of virtual page ids [first, first + page_count) to a document."""

    mapping_id: str
    document_ref: str
    first_virtual_page: int
    page_count: int
    anchors: tuple[Anchor, ...]

    def to_dict(self) -> dict:
        return {
            "mapping_id": self.mapping_id,
            "document_ref": self.document_ref,
            "first_virtual_page": self.first_virtual_page,
            "page_count": self.page_count,
            "anchors": [a.to_dict() for a in self.anchors],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PrintMapping":
        return cls(
            mapping_id=d["mapping_id"],
            document_ref=d["document_ref"],
            first_virtual_page=int(d["first_virtual_page"]),
            page_count=int(d["page_count"]),
            anchors=tuple(Anchor.from_dict(a) for a in d["anchors"]),
        )


FULL_PAGE = Rect(0.0, 0.0, 1.0, 1.0)


class ExcerptStore:
    """Single-writer store of post-its and print mappings under data_dir."""

    def __init__(self, data_dir: Path):
        self.path = Path(data_dir) / EXCERPTS_FILE
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._postits: dict[str, PostIt] = {}
        self._mappings: dict[str, PrintMapping] = {}
        self._anchors_by_page: dict[int, list[Anchor]] = {}
        self._next_virtual_page = 1
        self._counter = 0
        self._record_count = 0
        self._load()

    def _load(self) -> None:
        if not self.path.exists():
            return
        data = self.path.read_bytes()
        lines, valid_len = scan_complete_lines(data)
        if valid_len != len(data):
            logger.warning("%s: dropping torn trailing record", self.path.name)
            with open(self.path, "r+b") as fh:
                fh.truncate(valid_len)
        for line in lines:
            record = _loads(line)
            self._apply(record)
            self._record_count += 1

    def _apply(self, record: dict) -> None:
        kind = record.get("type")
        if kind == "postit":
            postit = PostIt.from_dict(record)
            self._postits[postit.postit_id] = postit
            self._counter = max(self._counter, _trailing_number(postit.postit_id))
        elif kind == "print_mapping":
            mapping = PrintMapping.from_dict(record)
            self._mappings[mapping.mapping_id] = mapping
            for anchor in mapping.anchors:
                self._anchors_by_page.setdefault(anchor.virtual_page_id, []).append(anchor)
            self._next_virtual_page = max(
                self._next_virtual_page, mapping.first_virtual_page + mapping.page_count
            )
            self._counter = max(self._counter, _trailing_number(mapping.mapping_id))
        else:
            raise CodecError(f"excerpt store: unknown record type {kind!r}")

    def _write(self, record: dict) -> None:
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(canonical_dumps(record) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self._record_count += 1

    # -- post-its -----------------------------------------------------------

    def create_postit(
        self, source_url: str, region: Rect, content_ref: str, now: int
    ) -> PostIt:
        """Capture a new ACTIVE post-it; every capture gets a fresh identity."""
        if not source_url:
            raise UnoteError("post-it needs a source_url")
        with self._lock:
            self._counter += 1
            postit = PostIt(
                postit_id=f"postit-{self._counter:06d}",
                source_url=source_url,
                source_region=region,
                content_ref=content_ref,
                captured_at=now,
            )
            self._store_postit(postit)
            return postit

    def _store_postit(self, postit: PostIt) -> None:
        self._write({"type": "postit", **postit.to_dict()})
        self._postits[postit.postit_id] = postit

    def get(self, postit_id: str) -> PostIt:
        with self._lock:
            try:
                return self._postits[postit_id]
            except KeyError:
                raise UnoteError(f"unknown post-it {postit_id!r}") from None

    def postits(self) -> list[PostIt]:
        with self._lock:
            return sorted(self._postits.values(), key=lambda p: p.postit_id)

    def stick(self, postit_id: str, notebook_id: str, page: int, rect: Rect) -> PostIt:
        """Anchor an ACTIVE post-it to a notebook page, freezing it."""
        if page < 0:
            raise UnoteError(f"negative page {page}")
        with self._lock:
            postit = self._postits.get(postit_id)
            if postit is None:
                raise UnoteError(f"unknown post-it {postit_id!r}")
            if postit.state is PostItState.STUCK:
                raise StateError(f"post-it {postit_id} is already stuck")
            stuck = replace(
                postit,
                state=PostItState.STUCK,
                notebook_id=notebook_id,
                page=page,
                rect=rect,
            )
            self._store_postit(stuck)
            return stuck

    def unstick(self, postit_id: str) -> PostIt:
        """Reactivate a stuck post-it; its page anchor is cleared."""
        with self._lock:
            postit = self._postits.get(postit_id)
            if postit is None:
                raise UnoteError(f"unknown post-it {postit_id!r}")
            if postit.state is not PostItState.STUCK:
                raise StateError(f"post-it {postit_id} is not stuck")
            active = replace(
                postit, state=PostItState.ACTIVE, notebook_id=None, page=None, rect=None
            )
            self._store_postit(active)
            return active

    def resize(self, postit_id: str, region: Rect) -> PostIt:
        """Re-crop an ACTIVE post-it. Stuck post-its are immutable."""
        with self._lock:
            postit = self._postits.get(postit_id)
            if postit is None:
                raise UnoteError(f"unknown post-it {postit_id!r}")
            if postit.state is PostItState.STUCK:
                raise StateError("stuck post-it immutable")
            resized = replace(postit, source_region=region)
            self._store_postit(resized)
            return resized

    def open_source(self, postit_id: str) -> str:
        """Original document url, regardless of state (liveness is the
        client's problem)."""
        return self.get(postit_id).source_url

    def capture_from_wire(self, frame: dict) -> int:
        """Store a post-it arriving over the capture wire protocol.

        Returns the store's record count, which serves as the ack seq.
        """
        try:
            region = Rect.from_dict(frame["region"])
            source_url = frame["source_url"]
            content_ref = frame["content_ref"]
            captured_at = int(frame["captured_at"])
        except (KeyError, TypeError, ValueError) as exc:
            raise UnoteError(f"bad post-it frame: {exc}") from None
        self.create_postit(source_url, region, content_ref, captured_at)
        with self._lock:
            return self._record_count

    # -- print mappings -------------------------------------------------------

    def allocate_print(
        self,
        document_ref: str,
        page_count: int,
        declared_regions: Iterable[tuple[int, Rect]] = (),
    ) -> PrintMapping:
        """Allocate fresh virtual pages for a printed document.

        Every printed page gets a full-page anchor; declared_regions adds
        finer anchors as (document page index, region) pairs. Virtual page
        ids are globally unique and never reused, across store reloads.
        """
        if page_count < 1:
            raise UnoteError(f"page_count must be >= 1, got {page_count}")
        with self._lock:
            first = self._next_virtual_page
            anchors = [
                Anchor(
                    virtual_page_id=first + i,
                    rect=FULL_PAGE,
                    doc_page=i,
                    doc_region=FULL_PAGE,
                )
                for i in range(page_count)
            ]
            for doc_page, region in declared_regions:
                if not (0 <= doc_page < page_count):
                    raise UnoteError(
                        f"declared region on page {doc_page} outside document"
                    )
                anchors.append(
                    Anchor(
                        virtual_page_id=first + doc_page,
                        rect=region,
                        doc_page=doc_page,
                        doc_region=region,
                    )
                )
            self._counter += 1
            mapping = PrintMapping(
                mapping_id=f"mapping-{self._counter:06d}",
                document_ref=document_ref,
                first_virtual_page=first,
                page_count=page_count,
                anchors=tuple(anchors),
            )
            self._write({"type": "print_mapping", **mapping.to_dict()})
            self._mappings[mapping.mapping_id] = mapping
            for anchor in mapping.anchors:
                self._anchors_by_page.setdefault(anchor.virtual_page_id, []).append(anchor)
            self._next_virtual_page = first + page_count
            return mapping

    def mappings(self) -> list[PrintMapping]:
        with self._lock:
            return sorted(self._mappings.values(), key=lambda m: m.first_virtual_page)

    def resolve_coord(self, virtual_page_id: int, x: float, y: float) -> Anchor:
        """Document anchor under a pen tap on a printed (possibly cut) page.

        The innermost (smallest-area) anchor region containing the point
        wins; the full-page anchor guarantees totality on allocated pages.
        The result does not depend on anchor insertion order.
        """
        if not (0.0 <= x < 1.0 and 0.0 <= y < 1.0):
            raise UnoteError(f"tap ({x}, {y}) outside [0, 1)")
        with self._lock:
            anchors = self._anchors_by_page.get(virtual_page_id)
            if anchors is None:
                raise UnoteError(f"unknown virtual page {virtual_page_id}")
            containing = [a for a in anchors if a.rect.contains(x, y)]
            containing.sort(
                key=lambda a: (
                    a.rect.area,
                    a.rect.x,
                    a.rect.y,
                    a.rect.w,
                    a.rect.h,
                    a.doc_page,
                )
            )
            return containing[0]


def _trailing_number(identifier: str) -> int:
    tail = identifier.rsplit("-", 1)[-1]
    return int(tail) if tail.isdigit() else 0
