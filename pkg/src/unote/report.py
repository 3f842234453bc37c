"""Operator reports: matplotlib figures rendered next to the data they plot.

The report path always writes the delimited form (segments.ndjson, one
canonical JSON segment per line) and a timeline figure of the same
segments; given a notebook page it also renders the page with the
written/grayed split and the red-dot position at the requested instant.
"""

from __future__ import annotations

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .codec import canonical_dumps
from .model import Channel, Stroke
from .replay import cursor_at, gray_partition
from .temporal import SessionIndex

logger = logging.getLogger(__name__)

_LANES = {
    Channel.SLIDES: 4,
    Channel.WEB: 3,
    Channel.MEDIA: 2,
    Channel.WHITEBOARD: 1,
    Channel.AUDIO: 0,
}
_COLORS = {
    Channel.SLIDES: "#4878cf",
    Channel.WEB: "#6acc65",
    Channel.MEDIA: "#d65f5f",
    Channel.WHITEBOARD: "#956cb4",
    Channel.AUDIO: "#c4ad66",
}

# A4 page proportions for notebook renders.
PAGE_ASPECT = 297.0 / 210.0


def write_segments_ndjson(index: SessionIndex, path: Path) -> int:
    segments = index.all_segments()
    with open(path, "w", encoding="utf-8") as fh:
        for seg in segments:
            fh.write(canonical_dumps(seg.to_dict()) + "\n")
    return len(segments)


def write_timeline_figure(index: SessionIndex, path: Path) -> None:
    """One lane per channel, a bar per segment, minutes on the x axis."""
    fig, ax = plt.subplots(figsize=(11, 3.2))
    t0 = index.span.start
    for channel in Channel:
        for seg in index.segments.get(channel, ()):
            start_min = (seg.interval.start - t0) / 60_000
            width_min = (seg.interval.end - seg.interval.start) / 60_000
            ax.broken_barh(
                [(start_min, width_min)],
                (_LANES[channel] - 0.35, 0.7),
                facecolors=_COLORS[channel],
                edgecolor="white",
                linewidth=0.5,
            )
    ax.set_yticks(sorted(_LANES.values()))
    ax.set_yticklabels([c.value for c in sorted(_LANES, key=_LANES.get)])
    ax.set_xlabel("minutes into the lesson")
    ax.set_xlim(0, max((index.span.end - t0) / 60_000, 1))
    ax.set_title(f"{index.session_id}: channel segments")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def write_page_figure(
    strokes: list[Stroke], at: int, path: Path, title: str = ""
) -> None:
    """Notebook page at virtual time `at`: written ink solid, later strokes
    grayed, red dot on the current position."""
    part = gray_partition(strokes, at)
    fig, ax = plt.subplots(figsize=(5, 5 * PAGE_ASPECT))
    for _, samples in part.grayed:
        xs = [s[0] for s in samples]
        ys = [s[1] for s in samples]
        ax.plot(xs, ys, color="#c8c8c8", linewidth=1.2)
    for _, samples in part.visible:
        xs = [s[0] for s in samples]
        ys = [s[1] for s in samples]
        ax.plot(xs, ys, color="#1a237e", linewidth=1.4)
    cursor = cursor_at(strokes, at)
    if cursor is not None:
        ax.plot([cursor.x], [cursor.y], marker="o", color="red", markersize=7)
    ax.set_xlim(0, 1)
    ax.set_ylim(1, 0)  # page origin top-left
    ax.set_xticks(())
    ax.set_yticks(())
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def write_session_report(
    index: SessionIndex,
    out_dir: Path,
    strokes: list[Stroke] | None = None,
    at: int | None = None,
    page_label: str = "page",
) -> dict:
    """Render the full report into out_dir; returns what was written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ndjson_path = out_dir / f"{index.session_id}-segments.ndjson"
    timeline_path = out_dir / f"{index.session_id}-timeline.png"
    count = write_segments_ndjson(index, ndjson_path)
    write_timeline_figure(index, timeline_path)
    written = {
        "segments": str(ndjson_path),
        "timeline": str(timeline_path),
        "segment_count": count,
    }
    if strokes:
        t = index.span.end if at is None else at
        page_path = out_dir / f"{index.session_id}-{page_label}.png"
        write_page_figure(strokes, t, page_path, title=f"{page_label} @ {t}")
        written["page"] = str(page_path)
    return written
