from __future__ import annotations

import pytest

from unote.model import Channel
from unote.simulate import SimProfile, SimResult, generate
from unote.temporal import SessionIndex, build_index

ACCEPTANCE_SEEDS = range(1, 51)


def corpus_profile(seed: int) -> SimProfile:
    """Seed-varied lesson shapes so the corpus exercises different boundaries.

    Every profile stays far below the 10_000-events-per-session cap.
    """
    channels = set(Channel)
    if seed % 7 == 0:
        channels.discard(Channel.WEB)
    if seed % 11 == 0:
        channels.discard(Channel.MEDIA)
    skew = (-1) ** seed * ((seed * 7919) % 600_000)
    return SimProfile(
        seed=seed,
        duration_ms=(20 + seed % 5 * 10) * 60_000,
        channels=frozenset(channels),
        slide_count=4 + seed % 13 * 3,
        media_clip_count=1 + seed % 3,
        media_clip_length_ms=120_000 + seed % 4 * 60_000,
        strokes_per_page=8 + seed % 9,
        pages=2 + seed % 3,
        pen_skew_ms=skew,
        pause_probability=(seed % 10) / 10.0,
    )


@pytest.fixture(scope="session")
def corpus() -> list[SimResult]:
    return [generate(corpus_profile(seed)) for seed in ACCEPTANCE_SEEDS]


@pytest.fixture(scope="session")
def indexed_corpus(corpus) -> list[tuple[SimResult, SessionIndex]]:
    return [(result, build_index(result.events)) for result in corpus]
