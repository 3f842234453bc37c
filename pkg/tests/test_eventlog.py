from __future__ import annotations

import threading

import pytest

from unote import codec, model
from unote.errors import LogCorruptError, UnknownSessionError, UnoteError
from unote.eventlog import LogStore, SessionLog, recover, scan_complete_lines
from unote.model import Channel, SharingPolicy, Session, TimeInterval


def make_session(session_id="s1") -> Session:
    return Session(session_id, "history", "t1", TimeInterval(0, 3_600_000), SharingPolicy())


def ev(i: int, session_id="s1", client_event_id=None):
    return model.slide_changed(
        session_id, at=i * 1000, media_ref="deck", slide_index=i, client_event_id=client_event_id
    )


class TestAppend:
    def test_first_event_gets_seq_1(self, tmp_path):
        log = SessionLog(tmp_path / "s1.ndjson", "s1")
        assert log.append(ev(0)) == 1

    def test_seq_counts_up(self, tmp_path):
        log = SessionLog(tmp_path / "s1.ndjson", "s1")
        for i in range(3):
            log.append(ev(i))
        assert log.append(ev(3)) == 4

    def test_same_client_event_id_is_idempotent(self, tmp_path):
        log = SessionLog(tmp_path / "s1.ndjson", "s1")
        first = log.append(ev(0, client_event_id="c-1"))
        second = log.append(ev(0, client_event_id="c-1"))
        assert first == second == 1
        assert len(log.read_all()) == 1

    def test_wrong_session_rejected(self, tmp_path):
        log = SessionLog(tmp_path / "s1.ndjson", "s1")
        with pytest.raises(UnoteError, match="does not match"):
            log.append(ev(0, session_id="other"))

    def test_invalid_event_rejected_and_log_unchanged(self, tmp_path):
        log = SessionLog(tmp_path / "s1.ndjson", "s1")
        bad = model.CaptureEvent("s1", Channel.WEB, 0, model.EventKind.SLIDE_CHANGED,
                                 media_ref="d", slide_index=0)
        with pytest.raises(UnoteError, match="invalid event"):
            log.append(bad)
        assert log.read_all() == []


class TestReadAll:
    def test_round_trip_byte_equal(self, tmp_path):
        log = SessionLog(tmp_path / "s1.ndjson", "s1")
        events = [ev(i) for i in range(7)]
        for e in events:
            log.append(e)
        lines_before = (tmp_path / "s1.ndjson").read_bytes()
        read = log.read_all()
        assert [e.slide_index for e in read] == list(range(7))
        reserialized = b"".join(codec.event_line(e).encode() for e in read)
        assert reserialized == lines_before

    def test_empty_log_reads_empty(self, tmp_path):
        log = SessionLog(tmp_path / "s1.ndjson", "s1")
        assert log.read_all() == []

    def test_torn_final_line_is_dropped_on_read(self, tmp_path):
        # a live reader sees only the complete prefix while a record is torn
        path = tmp_path / "s1.ndjson"
        log = SessionLog(path, "s1")
        for i in range(5):
            log.append(ev(i))
        data = path.read_bytes()
        path.write_bytes(data[:-10])
        assert len(log.read_all()) == 4
        log.close()

    def test_opening_a_torn_file_directly_is_refused(self, tmp_path):
        path = tmp_path / "s1.ndjson"
        log = SessionLog(path, "s1")
        log.append(ev(0))
        log.close()
        path.write_bytes(path.read_bytes()[:-3])
        with pytest.raises(LogCorruptError, match="torn"):
            SessionLog(path, "s1")

    def test_corrupt_middle_record_names_first_bad_seq(self, tmp_path):
        path = tmp_path / "s1.ndjson"
        log = SessionLog(path, "s1")
        for i in range(5):
            log.append(ev(i))
        log.close()
        lines = path.read_bytes().splitlines(keepends=True)
        lines[2] = b"not json at all\n"
        path.write_bytes(b"".join(lines))
        with pytest.raises(LogCorruptError) as err:
            SessionLog(path, "s1").read_all()
        assert err.value.bad_seq == 3


class TestRecover:
    def test_truncated_tail_drops_one_record(self, tmp_path):
        path = tmp_path / "s1.ndjson"
        log = SessionLog(path, "s1")
        for i in range(5):
            log.append(ev(i))
        log.close()
        path.write_bytes(path.read_bytes()[:-10])
        recovered = recover(path)
        events = recovered.read_all()
        assert len(events) == 4
        assert recovered.next_seq == 5

    def test_recover_then_append_continues_cleanly(self, tmp_path):
        path = tmp_path / "s1.ndjson"
        log = SessionLog(path, "s1")
        for i in range(3):
            log.append(ev(i))
        log.close()
        path.write_bytes(path.read_bytes()[:-4])
        recovered = recover(path)
        assert recovered.append(ev(99)) == 3
        assert [e.seq for e in recovered.read_all()] == [1, 2, 3]

    def test_clean_file_recovers_identically(self, tmp_path):
        path = tmp_path / "s1.ndjson"
        log = SessionLog(path, "s1")
        appended = [ev(i) for i in range(4)]
        for e in appended:
            log.append(e)
        log.close()
        recovered = recover(path)
        assert [e.slide_index for e in recovered.read_all()] == [0, 1, 2, 3]
        assert recovered.next_seq == 5

    def test_zero_byte_file(self, tmp_path):
        path = tmp_path / "s1.ndjson"
        path.touch()
        recovered = recover(path)
        assert recovered.read_all() == []
        assert recovered.next_seq == 1

    def test_mid_file_corruption_is_unrecoverable(self, tmp_path):
        path = tmp_path / "s1.ndjson"
        log = SessionLog(path, "s1")
        for i in range(4):
            log.append(ev(i))
        log.close()
        lines = path.read_bytes().splitlines(keepends=True)
        lines[1] = lines[1][: len(lines[1]) // 2] + b"\n"
        path.write_bytes(b"".join(lines))
        with pytest.raises(LogCorruptError):
            recover(path)

    def test_idempotency_map_survives_recovery(self, tmp_path):
        path = tmp_path / "s1.ndjson"
        log = SessionLog(path, "s1")
        log.append(ev(0, client_event_id="c-zero"))
        log.close()
        recovered = recover(path)
        assert recovered.append(ev(0, client_event_id="c-zero")) == 1


def test_scan_complete_lines_accounts_every_byte():
    data = b'{"a":1}\n{"b":2}\n{"half'
    lines, valid = scan_complete_lines(data)
    assert lines == [b'{"a":1}', b'{"b":2}']
    assert valid == 16


class TestLogStore:
    def test_unknown_session_rejected(self, tmp_path):
        store = LogStore(tmp_path)
        with pytest.raises(UnknownSessionError):
            store.append(ev(0))

    def test_register_and_append(self, tmp_path):
        store = LogStore(tmp_path)
        store.register_session(make_session())
        assert store.append(ev(0)) == 1
        assert len(store.read_all("s1")) == 1

    def test_catalog_survives_reload_and_last_record_wins(self, tmp_path):
        store = LogStore(tmp_path)
        store.register_session(make_session())
        updated = Session(
            "s1", "history", "t1", TimeInterval(0, 3_600_000),
            SharingPolicy().with_channel(Channel.AUDIO, False),
        )
        store.register_session(updated)
        fresh = LogStore(tmp_path)
        assert fresh.session("s1").sharing.is_shared(Channel.AUDIO) is False

    def test_concurrent_appends_have_no_gaps(self, tmp_path):
        store = LogStore(tmp_path)
        store.register_session(make_session())
        errors = []

        def worker(worker_id: int):
            try:
                for i in range(50):
                    store.append(ev(i, client_event_id=f"w{worker_id}-{i}"))
            except Exception as exc:  # pragma: no cover
                errors.append(exc)

        threads = [threading.Thread(target=worker, args=(w,)) for w in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors
        seqs = [e.seq for e in store.read_all("s1")]
        assert seqs == list(range(1, 201))
