#!/usr/bin/env python3
"""Regenerate frontend test fixtures and golden files from the backend.

Golden files come from the `unote replay --export` timeline (the
deterministic reference the UI must reproduce); fixtures are live access-api
responses captured through the test client. Run from anywhere:

    python3 frontend/scripts/generate-fixtures.py
"""

from __future__ import annotations

import json
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from unote.api import create_app
from unote.model import Channel
from unote.simulate import SimProfile, emit, generate
from unote.strokes import StrokeStore

HERE = Path(__file__).resolve().parent
GOLDEN = HERE.parent / "tests" / "golden"
FIXTURES = HERE.parent / "tests" / "fixtures"

GOLDEN_SEEDS = (7, 12, 23)

# Busy lesson: one long page that crosses many slide segments, so the
# thumbnail tooltip needs several six-slot pages.
BUSY_PROFILE = SimProfile(
    seed=41,
    slide_count=40,
    media_clip_count=3,
    pages=1,
    strokes_per_page=90,
    pen_skew_ms=-250,
)


def write(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")
    print(f"wrote {path}")


def golden_for_seed(seed: int) -> None:
    profile = SimProfile(seed=seed)
    result = generate(profile)
    with tempfile.TemporaryDirectory() as tmp:
        data_dir = Path(tmp) / "data"
        emit(result, data_dir)
        StrokeStore(data_dir).import_dump(result.pen_dump)
        export = Path(tmp) / "timeline.ndjson"
        proc = subprocess.run(
            [
                sys.executable, "-m", "unote.cli",
                "--data-dir", str(data_dir),
                "replay", result.session.session_id,
                "--speed", "1", "--tick-ms", "25000",
                "--notebook", result.notebook_id, "--page", "0",
                "--export", str(export),
            ],
            capture_output=True,
            text=True,
            check=True,
        )
        ticks = json.loads(proc.stdout)["ticks"]
        assert ticks >= 100, f"seed {seed}: only {ticks} ticks, want >= 100 samples"
        GOLDEN.mkdir(parents=True, exist_ok=True)
        shutil.copy(export, GOLDEN / f"timeline-{seed}.ndjson")
        print(f"wrote {GOLDEN / f'timeline-{seed}.ndjson'} ({ticks} ticks)")

        app = create_app(data_dir)
        with TestClient(app) as client:
            strokes = client.get(
                f"/notebooks/{result.notebook_id}/pages/0/strokes"
            ).json()
            write(GOLDEN / f"strokes-{seed}.json", strokes)


def fixtures() -> None:
    result = generate(BUSY_PROFILE)
    with tempfile.TemporaryDirectory() as tmp:
        data_dir = Path(tmp) / "data"
        emit(result, data_dir)
        StrokeStore(data_dir).import_dump(result.pen_dump)
        app = create_app(data_dir)
        sid = result.session.session_id
        with TestClient(app) as client:
            write(
                FIXTURES / "calendar.json",
                client.get(
                    "/calendar", params={"from": "2011-03-01", "to": "2011-05-31"}
                ).json(),
            )
            write(FIXTURES / "documents-pupil.json", client.get(f"/sessions/{sid}/documents").json())
            write(
                FIXTURES / "documents-teacher.json",
                client.get(f"/sessions/{sid}/documents", headers={"X-Role": "TEACHER"}).json(),
            )
            segments = client.get(
                f"/notebooks/{result.notebook_id}/pages/0/segments"
            ).json()
            assert len(segments["pages"]) >= 3, "busy profile must span 3+ tooltip pages"
            write(FIXTURES / "segments-busy.json", segments)
            empty = client.get(
                f"/notebooks/{result.notebook_id}/pages/55/segments"
            ).json()
            write(FIXTURES / "segments-empty.json", empty)
    # sanity: the pupil fixture must hide the whiteboard (default policy)
    docs = json.loads((FIXTURES / "documents-pupil.json").read_text())
    assert all(d["channel"] != Channel.WHITEBOARD.value for d in docs["documents"])


def main() -> None:
    for seed in GOLDEN_SEEDS:
        golden_for_seed(seed)
    fixtures()


if __name__ == "__main__":
    main()
