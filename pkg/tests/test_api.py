from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from unote.api import create_app
from unote.eventlog import LogStore
from unote.model import Channel, Session, TimeInterval
from unote.simulate import SimProfile, emit, generate
from unote.strokes import StrokeStore


@pytest.fixture(scope="module")
def sim_env(tmp_path_factory):
    data_dir = tmp_path_factory.mktemp("apidata")
    result = generate(SimProfile(seed=12))
    emit(result, data_dir)
    store = StrokeStore(data_dir)
    store.import_dump(result.pen_dump)
    return data_dir, result


@pytest.fixture()
def client(sim_env):
    data_dir, _ = sim_env
    app = create_app(data_dir)
    with TestClient(app) as c:
        yield c


TEACHER = {"X-Role": "TEACHER"}


class TestCalendar:
    def test_no_sessions_in_range(self, client):
        r = client.get("/calendar", params={"from": "1999-01-01", "to": "1999-01-31"})
        assert r.status_code == 200
        assert r.json() == {"days": []}

    def test_session_day_contains_lecture(self, client, sim_env):
        _, result = sim_env
        import datetime

        day = datetime.datetime.fromtimestamp(
            result.session.scheduled.start / 1000, tz=datetime.timezone.utc
        ).date()
        r = client.get("/calendar", params={"from": day.isoformat(), "to": day.isoformat()})
        days = r.json()["days"]
        assert len(days) == 1
        assert days[0]["sessions"][0]["session_id"] == result.session.session_id

    def test_from_after_to_is_400(self, client):
        r = client.get("/calendar", params={"from": "2011-05-01", "to": "2011-04-01"})
        assert r.status_code == 400

    def test_malformed_date_is_400(self, client):
        r = client.get("/calendar", params={"from": "not-a-date", "to": "2011-04-01"})
        assert r.status_code == 400

    def test_session_spanning_midnight_appears_on_both_days(self, tmp_path):
        logs = LogStore(tmp_path)
        # 23:00 UTC on 2011-03-08 until 01:00 on 2011-03-09
        start = 1299625200000
        logs.register_session(
            Session("late", "astronomy", "t1", TimeInterval(start, start + 2 * 3_600_000))
        )
        with TestClient(create_app(tmp_path)) as client:
            r = client.get("/calendar", params={"from": "2011-03-08", "to": "2011-03-09"})
            days = r.json()["days"]
            assert [d["date"] for d in days] == ["2011-03-08", "2011-03-09"]
            assert all(d["sessions"][0]["session_id"] == "late" for d in days)


class TestDocuments:
    def test_unknown_session_404(self, client):
        assert client.get("/sessions/ghost/documents").status_code == 404

    def test_documents_are_deduplicated(self, client, sim_env):
        _, result = sim_env
        r = client.get(f"/sessions/{result.session.session_id}/documents", headers=TEACHER)
        docs = r.json()["documents"]
        keys = [(d["channel"], d["media_ref"]) for d in docs]
        assert len(keys) == len(set(keys))
        deck = [d for d in docs if d["channel"] == "SLIDES"]
        assert len(deck) == 1 and deck[0]["title"] == "lesson deck"

    def test_pupil_does_not_see_unshared_whiteboard(self, client, sim_env):
        _, result = sim_env
        r = client.get(f"/sessions/{result.session.session_id}/documents")
        assert all(d["channel"] != "WHITEBOARD" for d in r.json()["documents"])

    def test_teacher_sees_whiteboard(self, client, sim_env):
        _, result = sim_env
        r = client.get(f"/sessions/{result.session.session_id}/documents", headers=TEACHER)
        assert any(d["channel"] == "WHITEBOARD" for d in r.json()["documents"])

    def test_bad_role_header_is_400(self, client, sim_env):
        _, result = sim_env
        r = client.get(
            f"/sessions/{result.session.session_id}/documents",
            headers={"X-Role": "OVERLORD"},
        )
        assert r.status_code == 400


class TestState:
    def test_before_session_is_empty(self, client, sim_env):
        _, result = sim_env
        r = client.get(
            f"/sessions/{result.session.session_id}/state",
            params={"at": result.session.scheduled.start - 10_000},
        )
        body = r.json()
        assert body["slides"] is None and body["media"] is None
        assert body["whiteboard"] == {"stroke_count": 0}

    def test_matches_index_state_modulo_filtering(self, client, sim_env):
        _, result = sim_env
        from unote.temporal import build_index, state_at

        idx = build_index(result.events)
        t = idx.span.start + 2_000
        r = client.get(
            f"/sessions/{result.session.session_id}/state", params={"at": t}, headers=TEACHER
        )
        assert r.json() == state_at(idx, t).to_dict()

    def test_unshared_whiteboard_blanked_for_pupil(self, client, sim_env):
        _, result = sim_env
        t = result.session.scheduled.end - 1
        teacher = client.get(
            f"/sessions/{result.session.session_id}/state", params={"at": t}, headers=TEACHER
        ).json()
        pupil = client.get(
            f"/sessions/{result.session.session_id}/state", params={"at": t}
        ).json()
        assert teacher["whiteboard"]["stroke_count"] > 0
        assert pupil["whiteboard"]["stroke_count"] == 0

    def test_bad_at_is_400(self, client, sim_env):
        _, result = sim_env
        r = client.get(
            f"/sessions/{result.session.session_id}/state", params={"at": "wednesday"}
        )
        assert r.status_code == 400


class TestEvents:
    def test_full_span_is_whole_filtered_log(self, client, sim_env):
        _, result = sim_env
        r = client.get(f"/sessions/{result.session.session_id}/events", headers=TEACHER)
        assert r.json()["total"] == len(result.events)

    def test_empty_interval_yields_nothing(self, client, sim_env):
        _, result = sim_env
        t = result.events[3].at
        r = client.get(
            f"/sessions/{result.session.session_id}/events",
            params={"from": t, "to": t},
        )
        assert r.json()["events"] == []

    def test_window_composition(self, client, sim_env):
        _, result = sim_env
        sid = result.session.session_id
        start = result.events[0].at - 1
        end = result.events[-1].at
        whole = client.get(
            f"/sessions/{sid}/events", params={"from": start, "to": end}, headers=TEACHER
        ).json()["events"]
        mid = (start + end) // 2
        first = client.get(
            f"/sessions/{sid}/events", params={"from": start, "to": mid}, headers=TEACHER
        ).json()["events"]
        second = client.get(
            f"/sessions/{sid}/events", params={"from": mid, "to": end}, headers=TEACHER
        ).json()["events"]
        assert first + second == whole

    def test_from_after_to_is_400(self, client, sim_env):
        _, result = sim_env
        r = client.get(
            f"/sessions/{result.session.session_id}/events",
            params={"from": 100, "to": 50},
        )
        assert r.status_code == 400

    def test_pagination_windows_concatenate(self, client, sim_env):
        _, result = sim_env
        sid = result.session.session_id
        whole = client.get(f"/sessions/{sid}/events", headers=TEACHER).json()["events"]
        paged = []
        offset = 0
        while True:
            page = client.get(
                f"/sessions/{sid}/events",
                params={"limit": 7, "offset": offset},
                headers=TEACHER,
            ).json()["events"]
            if not page:
                break
            paged.extend(page)
            offset += 7
        assert paged == whole

    def test_pupil_stream_omits_whiteboard_but_keeps_lifecycle(self, client, sim_env):
        _, result = sim_env
        events = client.get(f"/sessions/{result.session.session_id}/events").json()["events"]
        kinds = {e["kind"] for e in events}
        assert "WhiteboardStrokeAdded" not in kinds
        assert "SessionStarted" in kinds and "SessionEnded" in kinds


class TestPageSegments:
    def test_chunked_in_sixes_with_filtering_before_chunking(self, client, sim_env):
        _, result = sim_env
        r = client.get(f"/notebooks/{result.notebook_id}/pages/0/segments", headers=TEACHER)
        body = r.json()
        assert body["total_segments"] == sum(len(p) for p in body["pages"])
        for page in body["pages"][:-1]:
            assert len(page) == 6
        pupil = client.get(f"/notebooks/{result.notebook_id}/pages/0/segments").json()
        assert all(
            seg["channel"] != "WHITEBOARD" for page in pupil["pages"] for seg in page
        )
        for page in pupil["pages"][:-1]:
            assert len(page) == 6

    def test_page_with_no_strokes_is_empty(self, client, sim_env):
        _, result = sim_env
        r = client.get(f"/notebooks/{result.notebook_id}/pages/77/segments")
        assert r.json()["pages"] == []

    def test_unknown_notebook_is_empty(self, client):
        r = client.get("/notebooks/nowhere/pages/0/segments")
        assert r.json()["total_segments"] == 0


class TestSharing:
    @pytest.fixture()
    def mutable_env(self, tmp_path):
        result = generate(SimProfile(seed=23))
        emit(result, tmp_path)
        StrokeStore(tmp_path).import_dump(result.pen_dump)
        app = create_app(tmp_path)
        with TestClient(app) as client:
            yield client, result

    def full_policy(self, **overrides) -> dict:
        policy = {c.value: c is not Channel.WHITEBOARD for c in Channel}
        policy.update(overrides)
        return policy

    def test_pupil_cannot_change_sharing(self, mutable_env):
        client, result = mutable_env
        r = client.put(
            f"/sessions/{result.session.session_id}/sharing", json=self.full_policy()
        )
        assert r.status_code == 403

    def test_sharing_whiteboard_reveals_it_to_pupils(self, mutable_env):
        client, result = mutable_env
        sid = result.session.session_id
        before = client.get(f"/notebooks/{result.notebook_id}/pages/1/segments").json()
        assert all(
            seg["channel"] != "WHITEBOARD" for page in before["pages"] for seg in page
        )
        r = client.put(
            f"/sessions/{sid}/sharing",
            headers=TEACHER,
            json=self.full_policy(WHITEBOARD=True),
        )
        assert r.status_code == 200
        docs = client.get(f"/sessions/{sid}/documents").json()["documents"]
        assert any(d["channel"] == "WHITEBOARD" for d in docs)

    def test_missing_channel_in_body_is_400(self, mutable_env):
        client, result = mutable_env
        r = client.put(
            f"/sessions/{result.session.session_id}/sharing",
            headers=TEACHER,
            json={"SLIDES": True},
        )
        assert r.status_code == 400

    def test_policy_survives_reload(self, tmp_path):
        result = generate(SimProfile(seed=29))
        emit(result, tmp_path)
        sid = result.session.session_id
        with TestClient(create_app(tmp_path)) as client:
            client.put(
                f"/sessions/{sid}/sharing",
                headers=TEACHER,
                json={c.value: False for c in Channel},
            )
        fresh = LogStore(tmp_path)
        assert not fresh.session(sid).sharing.is_shared(Channel.SLIDES)


class TestAssets:
    def test_missing_asset_404(self, client):
        assert client.get("/assets/nothing.png").status_code == 404

    def test_asset_roundtrip(self, tmp_path):
        (tmp_path / "assets").mkdir()
        (tmp_path / "assets" / "snap.png").write_bytes(b"not really a png")
        result = generate(SimProfile(seed=31))
        emit(result, tmp_path)
        with TestClient(create_app(tmp_path)) as client:
            r = client.get("/assets/snap.png")
            assert r.status_code == 200
            assert r.content == b"not really a png"

    def test_traversal_is_rejected(self, client):
        assert client.get("/assets/..%2Fsessions.ndjson").status_code in (400, 404)


class TestTimezone:
    def test_calendar_groups_by_school_timezone(self, tmp_path):
        # 23:30 UTC on 2011-03-08 is already 2011-03-09 in Paris (UTC+1);
        # with the school timezone configured, the lesson files under the 9th
        logs = LogStore(tmp_path)
        start = 1299627000000  # 2011-03-08T23:30:00Z
        logs.register_session(
            Session("evening", "astronomy", "t1", TimeInterval(start, start + 1_800_000))
        )
        with TestClient(create_app(tmp_path, tz="Europe/Paris")) as client:
            r = client.get("/calendar", params={"from": "2011-03-08", "to": "2011-03-09"})
            days = r.json()["days"]
            assert [d["date"] for d in days] == ["2011-03-09"]
        with TestClient(create_app(tmp_path, tz="UTC")) as client:
            r = client.get("/calendar", params={"from": "2011-03-08", "to": "2011-03-09"})
            days = r.json()["days"]
            assert [d["date"] for d in days] == ["2011-03-08"]
