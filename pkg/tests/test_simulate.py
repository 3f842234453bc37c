from __future__ import annotations

import json
import os
import stat

import pytest

from unote import codec
from unote.errors import UnoteError
from unote.eventlog import LogStore
from unote.model import Channel, EventKind, stroke_time, validate_event
from unote.simulate import Rng, SimProfile, emit, generate
from unote.strokes import StrokeStore, dump_to_dict

from .oracles import scan_state


def fingerprint(result) -> str:
    doc = {
        "session": codec.session_to_dict(result.session),
        "events": [codec.event_to_dict(e) for e in result.events],
        "dump": dump_to_dict(result.pen_dump),
        "truth": result.ground_truth.to_dict(),
    }
    return codec.canonical_dumps(doc)


class TestGenerate:
    def test_same_seed_is_byte_identical(self):
        profile = SimProfile(seed=5)
        assert fingerprint(generate(profile)) == fingerprint(generate(profile))

    def test_different_seeds_differ(self):
        assert fingerprint(generate(SimProfile(seed=5))) != fingerprint(
            generate(SimProfile(seed=6))
        )

    def test_zero_media_clips_means_no_media_events(self):
        result = generate(SimProfile(seed=4, media_clip_count=0))
        assert all(e.channel is not Channel.MEDIA for e in result.events)

    def test_dropped_channels_stay_silent(self):
        result = generate(
            SimProfile(seed=4, channels=frozenset({Channel.SLIDES, Channel.WHITEBOARD}))
        )
        used = {e.channel for e in result.events if e.kind not in
                (EventKind.SESSION_STARTED, EventKind.SESSION_ENDED)}
        assert used <= {Channel.SLIDES, Channel.WHITEBOARD}

    def test_whole_corpus_passes_the_validator(self, corpus):
        for result in corpus:
            for event in result.events:
                assert validate_event(event) is None, event

    def test_corpus_stays_under_event_cap(self, corpus):
        assert all(len(result.events) <= 10_000 for result in corpus)

    def test_seq_is_dense_and_times_non_decreasing(self, corpus):
        for result in corpus:
            seqs = [e.seq for e in result.events]
            assert seqs == list(range(1, len(seqs) + 1))
            ats = [e.at for e in result.events]
            assert ats == sorted(ats)

    def test_scenario_has_video_pause_and_mirrored_whiteboard(self):
        result = generate(SimProfile(seed=9))
        kinds = [e.kind for e in result.events]
        assert EventKind.MEDIA_PLAY in kinds
        assert EventKind.MEDIA_PAUSE in kinds
        wb_times = [
            stroke_time(e.wb_stroke)
            for e in result.events
            if e.kind is EventKind.WHITEBOARD_STROKE_ADDED
        ]
        assert wb_times, "scenario must draw on the whiteboard"
        pupil_starts = {
            (first, sid) for sid, (first, _) in result.ground_truth.stroke_intervals.items()
        }
        for wb_t in wb_times:
            assert any(
                wb_t < start <= wb_t + 3000 for start, _ in pupil_starts
            ), f"no pupil stroke mirrors the board stroke at {wb_t}"

    def test_teacher_events_are_grid_aligned(self, corpus):
        for result in corpus:
            for e in result.events:
                assert e.at % 1000 == 0
                if e.kind is EventKind.WHITEBOARD_STROKE_ADDED:
                    assert stroke_time(e.wb_stroke) % 1000 == 0

    def test_pen_dump_carries_skew(self):
        result = generate(SimProfile(seed=8, pen_skew_ms=-4321))
        dump = result.pen_dump
        assert dump.sync_pen_time - dump.sync_host_time == -4321
        for stroke in dump.strokes:
            host_first, _ = result.ground_truth.stroke_intervals[stroke.stroke_id]
            assert stroke.start_time == host_first + (-4321)

    def test_skew_bound_enforced(self):
        with pytest.raises(UnoteError, match="implausible"):
            generate(SimProfile(seed=1, pen_skew_ms=600_001))

    def test_ground_truth_matches_independent_scan(self):
        result = generate(SimProfile(seed=13))
        events = list(result.events)
        for t, snapshot in result.ground_truth.snapshots:
            assert snapshot == scan_state(events, t)


class TestProfile:
    def test_round_trip_via_dict(self):
        profile = SimProfile(
            seed=17, channels=frozenset({Channel.SLIDES, Channel.AUDIO}), pages=4
        )
        assert SimProfile.from_dict(profile.to_dict()) == profile

    def test_validation_of_counts(self):
        with pytest.raises(UnoteError):
            SimProfile(seed=1, pages=-1).validate()
        with pytest.raises(UnoteError):
            SimProfile(seed=1, duration_ms=0).validate()
        with pytest.raises(UnoteError, match="whole seconds"):
            SimProfile(seed=1, duration_ms=1234).validate()


class TestRng:
    def test_streams_are_deterministic(self):
        a, b = Rng(42), Rng(42)
        assert [a.next64() for _ in range(5)] == [b.next64() for _ in range(5)]

    def test_split_streams_are_independent(self):
        root = Rng(42)
        xs = [root.split("xs").next64() for _ in range(3)]
        ys = [root.split("ys").next64() for _ in range(3)]
        assert xs != ys
        assert [root.split("xs").next64() for _ in range(3)] == xs

    def test_randint_bounds(self):
        rng = Rng(1)
        values = [rng.randint(3, 7) for _ in range(200)]
        assert set(values) <= set(range(3, 8))
        assert {3, 7} <= set(values)


class TestEmit:
    def test_emit_read_all_round_trip(self, tmp_path):
        result = generate(SimProfile(seed=2))
        emit(result, tmp_path)
        store = LogStore(tmp_path)
        assert store.read_all(result.session.session_id) == list(result.events)
        assert store.session(result.session.session_id) == result.session

    def test_emit_then_ingest_counts_match(self, tmp_path):
        result = generate(SimProfile(seed=2))
        files = emit(result, tmp_path)
        dump_doc = json.loads(open(files["pen_dump"]).read())
        from unote.strokes import dump_from_dict

        store = StrokeStore(tmp_path)
        assert store.import_dump(dump_from_dict(dump_doc)) == len(result.pen_dump.strokes)

    def test_emit_twice_to_same_dir_is_rejected(self, tmp_path):
        result = generate(SimProfile(seed=2))
        emit(result, tmp_path)
        with pytest.raises(UnoteError, match="not empty"):
            emit(result, tmp_path)

    def test_emit_to_read_only_dir_fails(self, tmp_path):
        if os.geteuid() == 0:
            pytest.skip("running as root, directory modes are not enforced")
        target = tmp_path / "ro"
        target.mkdir()
        target.chmod(stat.S_IRUSR | stat.S_IXUSR)
        result = generate(SimProfile(seed=2))
        with pytest.raises(OSError):
            emit(result, target)

    def test_ground_truth_file_round_trips(self, tmp_path):
        result = generate(SimProfile(seed=2))
        files = emit(result, tmp_path)
        doc = json.loads(open(files["ground_truth"]).read())
        assert doc == result.ground_truth.to_dict()
