from __future__ import annotations

import json
import subprocess
import sys

import pytest

CLI = [sys.executable, "-m", "unote.cli"]


def run_cli(*args, cwd=None):
    return subprocess.run(
        CLI + [str(a) for a in args], capture_output=True, text=True, cwd=cwd
    )


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    data = tmp_path_factory.mktemp("clidata")
    out = run_cli("simulate", "--seed", 7, "--out", data)
    assert out.returncode == 0, out.stderr
    info = json.loads(out.stdout)
    ingest = run_cli("--data-dir", data, "ingest", data / f"pendump-pen-0007.json")
    assert ingest.returncode == 0, ingest.stderr
    return data, info


class TestExitCodes:
    def test_happy_path_simulate_then_build(self, tmp_path):
        assert run_cli("simulate", "--seed", 3, "--out", tmp_path).returncode == 0
        out = run_cli("--data-dir", tmp_path, "index", "build", "sim-0003")
        assert out.returncode == 0

    def test_state_at_without_at_is_usage_error(self, sim_dir):
        data, _ = sim_dir
        out = run_cli("--data-dir", data, "index", "state-at", "sim-0007")
        assert out.returncode == 2

    def test_unknown_subcommand_is_usage_error(self, sim_dir):
        data, _ = sim_dir
        out = run_cli("--data-dir", data, "frobnicate")
        assert out.returncode == 2
        assert "usage" in out.stderr.lower()

    def test_domain_error_is_exit_1(self, sim_dir):
        data, _ = sim_dir
        out = run_cli("--data-dir", data, "index", "build", "no-such-session")
        assert out.returncode == 1
        assert "error" in out.stderr.lower()
        assert out.stdout == ""

    def test_bad_rect_value_is_usage_error(self, sim_dir):
        data, _ = sim_dir
        out = run_cli(
            "--data-dir", data, "excerpt", "create",
            "--source-url", "http://x", "--region", "banana", "--content-ref", "c",
        )
        assert out.returncode == 2


class TestJsonContract:
    @pytest.mark.parametrize(
        "argv",
        [
            ("index", "build", "sim-0007"),
            ("index", "state-at", "sim-0007", "--at", "1300093201000"),
            ("index", "page-segments", "nb-0007", "0"),
        ],
    )
    def test_success_paths_emit_exactly_one_json_document(self, sim_dir, argv):
        data, _ = sim_dir
        out = run_cli("--data-dir", data, *argv)
        assert out.returncode == 0, out.stderr
        doc = json.loads(out.stdout)  # parses as a single document
        assert isinstance(doc, dict)
        assert out.stdout.count("\n") == 1

    def test_pretty_flag_is_still_one_document(self, sim_dir):
        data, _ = sim_dir
        out = run_cli("--data-dir", data, "--pretty", "index", "build", "sim-0007")
        assert json.loads(out.stdout)["session_id"] == "sim-0007"

    def test_state_at_matches_library(self, sim_dir):
        data, _ = sim_dir
        from unote.eventlog import LogStore
        from unote.temporal import build_index, state_at

        idx = build_index(LogStore(data).read_all("sim-0007"))
        t = idx.span.start + 60_000
        out = run_cli("--data-dir", data, "index", "state-at", "sim-0007", "--at", t)
        assert json.loads(out.stdout) == state_at(idx, t).to_dict()


class TestReplayExport:
    def test_two_runs_are_byte_identical(self, sim_dir, tmp_path):
        data, _ = sim_dir
        paths = []
        for name in ("a.ndjson", "b.ndjson"):
            export = tmp_path / name
            out = run_cli(
                "--data-dir", data, "replay", "sim-0007",
                "--speed", "2", "--tick-ms", "40000",
                "--notebook", "nb-0007", "--page", "0",
                "--export", export,
            )
            assert out.returncode == 0, out.stderr
            paths.append(export.read_bytes())
        assert paths[0] == paths[1]

    def test_export_covers_the_whole_span_once(self, sim_dir, tmp_path):
        data, _ = sim_dir
        export = tmp_path / "tl.ndjson"
        run_cli(
            "--data-dir", data, "replay", "sim-0007",
            "--speed", "4", "--tick-ms", "30000", "--export", export,
        )
        lines = [json.loads(l) for l in export.read_text().splitlines()]
        header, ticks = lines[0], lines[1:]
        assert header["session_id"] == "sim-0007"
        from unote.eventlog import LogStore

        total = len(LogStore(data).read_all("sim-0007"))
        emitted = sum(len(t["events"]) for t in ticks)
        assert emitted == total
        assert ticks[-1]["virtual_time"] >= max(e["at"] for t in ticks for e in t["events"])


class TestReport:
    def test_report_writes_figures_next_to_ndjson(self, sim_dir, tmp_path):
        data, _ = sim_dir
        out = run_cli(
            "--data-dir", data, "report", "sim-0007",
            "--out", tmp_path, "--notebook", "nb-0007", "--page", "0",
        )
        assert out.returncode == 0, out.stderr
        written = json.loads(out.stdout)["written"]
        for key in ("segments", "timeline", "page"):
            assert (tmp_path / json.loads(out.stdout)["written"][key].split("/")[-1]).exists(), key
        ndjson_lines = open(written["segments"]).read().splitlines()
        assert len(ndjson_lines) == written["segment_count"]
        assert open(written["timeline"], "rb").read(8).startswith(b"\x89PNG")


class TestExcerptCommands:
    def test_create_stick_unstick_resolve_flow(self, tmp_path):
        data = tmp_path
        created = run_cli(
            "--data-dir", data, "excerpt", "create",
            "--source-url", "http://frog.example", "--region", "0.1,0.1,0.4,0.3",
            "--content-ref", "snap.png",
        )
        assert created.returncode == 0, created.stderr
        pid = json.loads(created.stdout)["postit_id"]
        stuck = run_cli(
            "--data-dir", data, "excerpt", "stick", pid,
            "--notebook", "nb-1", "--page", "2", "--rect", "0.2,0.2,0.2,0.2",
        )
        assert json.loads(stuck.stdout)["state"] == "STUCK"
        second_stick = run_cli(
            "--data-dir", data, "excerpt", "stick", pid,
            "--notebook", "nb-1", "--page", "3", "--rect", "0.2,0.2,0.2,0.2",
        )
        assert second_stick.returncode == 1
        unstuck = run_cli("--data-dir", data, "excerpt", "unstick", pid)
        assert json.loads(unstuck.stdout)["state"] == "ACTIVE"
        allocated = run_cli(
            "--data-dir", data, "excerpt", "allocate", "--document", "doc.pdf", "--pages", 2
        )
        first_page = json.loads(allocated.stdout)["first_virtual_page"]
        resolved = run_cli("--data-dir", data, "excerpt", "resolve", first_page, 0.5, 0.5)
        assert json.loads(resolved.stdout)["doc_page"] == 0


class TestConfigFile:
    def test_flat_config_sets_data_dir(self, tmp_path):
        data = tmp_path / "store"
        run_cli("simulate", "--seed", 4, "--out", data)
        config = tmp_path / "unote.toml"
        config.write_text(f'data_dir = "{data}"\ngap_merge_ms = 15000\n# comment\n')
        out = run_cli("--config", config, "index", "build", "sim-0004")
        assert out.returncode == 0, out.stderr

    def test_unknown_config_key_is_domain_error(self, tmp_path):
        config = tmp_path / "unote.toml"
        config.write_text("data_dir = x\nmystery = 1\n")
        out = run_cli("--config", config, "index", "build", "sim-0004")
        assert out.returncode == 1
        assert "unknown config keys" in out.stderr

    def test_env_var_sets_data_dir(self, tmp_path):
        import os
        import subprocess

        run_cli("simulate", "--seed", 5, "--out", tmp_path)
        env = {**os.environ, "UNOTE_DATA_DIR": str(tmp_path)}
        out = subprocess.run(
            CLI + ["index", "build", "sim-0005"], capture_output=True, text=True, env=env
        )
        assert out.returncode == 0, out.stderr


class TestProfileFile:
    def test_simulate_with_profile_file(self, tmp_path):
        profile = {
            "seed": 99,
            "duration_ms": 1_200_000,
            "channels": ["SLIDES", "WHITEBOARD", "AUDIO"],
            "slide_count": 5,
            "media_clip_count": 0,
            "pages": 1,
            "strokes_per_page": 6,
            "pen_skew_ms": 1500,
        }
        profile_path = tmp_path / "profile.json"
        profile_path.write_text(json.dumps(profile))
        out = run_cli("simulate", "--profile", profile_path, "--out", tmp_path / "d")
        assert out.returncode == 0, out.stderr
        info = json.loads(out.stdout)
        assert info["session_id"] == "sim-0099"
        built = run_cli("--data-dir", tmp_path / "d", "index", "build", "sim-0099")
        doc = json.loads(built.stdout)
        assert doc["segments"]["MEDIA"] == []
        assert doc["segments"]["WEB"] == []
        assert len(doc["segments"]["SLIDES"]) == 5

    def test_seed_flag_overrides_profile_seed(self, tmp_path):
        profile_path = tmp_path / "profile.json"
        profile_path.write_text(json.dumps({"seed": 1}))
        out = run_cli("simulate", "--profile", profile_path, "--seed", 55, "--out", tmp_path / "d")
        assert json.loads(out.stdout)["session_id"] == "sim-0055"

    def test_invalid_profile_is_domain_error(self, tmp_path):
        profile_path = tmp_path / "profile.json"
        profile_path.write_text(json.dumps({"seed": 1, "duration_ms": -5}))
        out = run_cli("simulate", "--profile", profile_path, "--out", tmp_path / "d")
        assert out.returncode == 1
