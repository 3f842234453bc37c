"""Single entry point: serve, ingest, simulate, index, replay, excerpt, api.

Machine-first contract: every successful invocation prints exactly one JSON
document on stdout (canonical encoding; --pretty for humans) and exits 0.
Domain failures go to stderr with exit 1; usage problems exit 2.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import codec, model, simulate
from .config import ENV_DATA_DIR, CliConfig, load_config
from .errors import UnoteError
from .eventlog import LogStore
from .excerpts import ExcerptStore, Rect
from .replay import ReplaySession, ReplayState
from .strokes import StrokeStore, dump_from_dict
from .temporal import build_index, page_segment_hits, state_at, thumbnail_pages

SPEED_CHOICES = ("0.5", "1", "2", "4")


def _rect(text: str) -> Rect:
    try:
        x, y, w, h = (float(part) for part in text.split(","))
        return Rect(x, y, w, h)
    except (ValueError, TypeError) as exc:
        raise argparse.ArgumentTypeError(f"bad rect {text!r}: {exc}") from None


def _config(args: argparse.Namespace) -> CliConfig:
    return load_config(
        config_path=args.config,
        data_dir=args.data_dir,
        listen=getattr(args, "listen", None),
        log_level=args.log_level,
    )


# -- subcommand implementations ----------------------------------------------

def _cmd_serve(args) -> dict:
    from .server import CaptureServer

    config = _config(args)
    store = LogStore(config.data_dir)
    excerpts = ExcerptStore(config.data_dir)
    server = CaptureServer(config.listen_host_port, store, excerpt_store=excerpts)
    payload = {
        "listening": f"{server.server_address[0]}:{server.port}",
        "data_dir": str(config.data_dir),
    }
    _emit(payload, args.pretty)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        store.close()
    return None


def _cmd_api(args) -> dict:
    import uvicorn

    from .api import create_app

    config = _config(args)
    ui_dir = Path(args.ui) if args.ui else None
    app = create_app(
        config.data_dir, tz=config.timezone, gap_merge_ms=config.gap_merge_ms, ui_dir=ui_dir
    )
    host, port = config.listen_host_port
    _emit({"listening": f"{host}:{port}", "data_dir": str(config.data_dir)}, args.pretty)
    uvicorn.run(app, host=host, port=port, log_level=config.log_level.lower())
    return None


def _cmd_simulate(args) -> dict:
    if args.profile is not None:
        profile_doc = json.loads(Path(args.profile).read_text())
        if args.seed is not None:
            profile_doc["seed"] = args.seed
        profile = simulate.SimProfile.from_dict(profile_doc)
    else:
        if args.seed is None:
            raise UnoteError("either --seed or --profile is required")
        profile = simulate.SimProfile(seed=args.seed)
    result = simulate.generate(profile)
    files = simulate.emit(result, Path(args.out))
    return {
        "session_id": result.session.session_id,
        "notebook_id": result.notebook_id,
        "events": len(result.events),
        "strokes": len(result.pen_dump.strokes),
        "files": files,
    }


def _cmd_ingest(args) -> dict:
    config = _config(args)
    dump_doc = json.loads(Path(args.dump_file).read_text())
    dump = dump_from_dict(dump_doc)
    store = StrokeStore(config.data_dir)
    added = store.import_dump(dump)
    from .strokes import clock_offset

    return {
        "pen_id": dump.pen_id,
        "offset_ms": clock_offset(dump),
        "strokes_in_dump": len(dump.strokes),
        "added": added,
    }


def _cmd_index_build(args) -> dict:
    config = _config(args)
    store = LogStore(config.data_dir)
    index = build_index(store.read_all(args.session_id))
    return {
        "session_id": args.session_id,
        "span": {"start": index.span.start, "end": index.span.end},
        "event_count": len(index.events),
        "segments": {
            channel.value: [seg.to_dict() for seg in index.segments[channel]]
            for channel in model.Channel
        },
    }


def _cmd_index_state_at(args) -> dict:
    config = _config(args)
    store = LogStore(config.data_dir)
    index = build_index(store.read_all(args.session_id))
    return state_at(index, args.at).to_dict()


def _cmd_index_page_segments(args) -> dict:
    config = _config(args)
    logs = LogStore(config.data_dir)
    strokes = StrokeStore(config.data_dir).strokes_for_page(args.notebook_id, args.page)
    hits: list[tuple[int, dict]] = []
    for session in logs.sessions():
        index = build_index(logs.read_all(session.session_id))
        for first, seg in page_segment_hits(index, strokes, config.gap_merge_ms):
            entry = seg.to_dict()
            entry["session_id"] = session.session_id
            hits.append((first, entry))
    hits.sort(key=lambda pair: pair[0])
    ordered = [entry for _, entry in hits]
    return {
        "notebook_id": args.notebook_id,
        "page": args.page,
        "total_segments": len(ordered),
        "pages": thumbnail_pages(ordered),
    }


def _cmd_replay(args) -> dict:
    config = _config(args)
    logs = LogStore(config.data_dir)
    index = build_index(logs.read_all(args.session_id))
    strokes = []
    if args.notebook_id is not None and args.page is not None:
        strokes = StrokeStore(config.data_dir).strokes_for_page(args.notebook_id, args.page)
    speed = Fraction(args.speed)
    start = index.span.start if getattr(args, "from") is None else getattr(args, "from")
    session = ReplaySession(index, strokes, speed=speed, start_at=start)
    session.play()
    ticks = 0
    with open(args.export, "w", encoding="utf-8") as fh:
        header = {
            "session_id": args.session_id,
            "from": session.virtual_time,
            "speed": str(speed),
            "tick_ms": args.tick_ms,
            "notebook_id": args.notebook_id,
            "page": args.page,
        }
        fh.write(codec.canonical_dumps(header) + "\n")
        first = session.tick(0)
        fh.write(codec.canonical_dumps({"tick": 0, **first.to_dict()}) + "\n")
        while session.state is ReplayState.PLAYING:
            ticks += 1
            result = session.tick(args.tick_ms)
            fh.write(codec.canonical_dumps({"tick": ticks, **result.to_dict()}) + "\n")
    return {
        "session_id": args.session_id,
        "export": args.export,
        "ticks": ticks,
        "virtual_end": session.virtual_time,
    }


def _cmd_excerpt_create(args) -> dict:
    config = _config(args)
    store = ExcerptStore(config.data_dir)
    postit = store.create_postit(args.source_url, args.region, args.content_ref, args.at)
    return postit.to_dict()


def _cmd_excerpt_stick(args) -> dict:
    config = _config(args)
    store = ExcerptStore(config.data_dir)
    return store.stick(args.postit_id, args.notebook_id, args.page, args.rect).to_dict()


def _cmd_excerpt_unstick(args) -> dict:
    config = _config(args)
    store = ExcerptStore(config.data_dir)
    return store.unstick(args.postit_id).to_dict()


def _cmd_excerpt_allocate(args) -> dict:
    config = _config(args)
    store = ExcerptStore(config.data_dir)
    regions = []
    if args.regions is not None:
        doc = json.loads(Path(args.regions).read_text())
        regions = [(int(item["doc_page"]), Rect.from_dict(item["region"])) for item in doc]
    return store.allocate_print(args.document_ref, args.pages, regions).to_dict()


def _cmd_excerpt_resolve(args) -> dict:
    config = _config(args)
    store = ExcerptStore(config.data_dir)
    return store.resolve_coord(args.virtual_page_id, args.x, args.y).to_dict()


def _cmd_report(args) -> dict:
    from . import report

    config = _config(args)
    logs = LogStore(config.data_dir)
    index = build_index(logs.read_all(args.session_id))
    strokes = None
    label = "page"
    if args.notebook_id is not None and args.page is not None:
        strokes = StrokeStore(config.data_dir).strokes_for_page(args.notebook_id, args.page)
        label = f"{args.notebook_id}-p{args.page}"
    written = report.write_session_report(
        index, Path(args.out), strokes=strokes, at=args.at, page_label=label
    )
    return {"session_id": args.session_id, "written": written}


# -- wiring -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unote",
        description="classroom capture-and-access pipeline",
    )
    parser.add_argument("--data-dir", help=f"data directory (or ${ENV_DATA_DIR})")
    parser.add_argument("--config", type=Path, help="flat key=value config file")
    parser.add_argument("--pretty", action="store_true", help="indent JSON output")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING, ...")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the capture server")
    p.add_argument("--listen", help="host:port to listen on")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("api", help="run the pupil access API")
    p.add_argument("--listen", help="host:port to listen on")
    p.add_argument("--ui", help="frontend directory to serve under /ui")
    p.set_defaults(func=_cmd_api)

    p = sub.add_parser("simulate", help="generate a synthetic lesson")
    p.add_argument("--seed", type=int)
    p.add_argument("--profile", help="profile JSON file")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("ingest", help="import a pen dump with clock correction")
    p.add_argument("dump_file")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("index", help="temporal index queries")
    index_sub = p.add_subparsers(dest="index_command", required=True)
    b = index_sub.add_parser("build", help="build and print the session index")
    b.add_argument("session_id")
    b.set_defaults(func=_cmd_index_build)
    s = index_sub.add_parser("state-at", help="media state at an instant")
    s.add_argument("session_id")
    s.add_argument("--at", type=int, required=True, help="epoch ms")
    s.set_defaults(func=_cmd_index_state_at)
    g = index_sub.add_parser("page-segments", help="thumbnail segments for a page")
    g.add_argument("notebook_id")
    g.add_argument("page", type=int)
    g.set_defaults(func=_cmd_index_page_segments)

    p = sub.add_parser("replay", help="export a deterministic replay timeline")
    p.add_argument("session_id")
    p.add_argument("--from", dest="from", type=int, help="start instant (epoch ms)")
    p.add_argument("--speed", choices=SPEED_CHOICES, default="1")
    p.add_argument("--tick-ms", type=int, default=250)
    p.add_argument("--notebook", dest="notebook_id")
    p.add_argument("--page", type=int)
    p.add_argument("--export", required=True, help="timeline NDJSON output path")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("excerpt", help="post-it and print-mapping operations")
    ex_sub = p.add_subparsers(dest="excerpt_command", required=True)
    c = ex_sub.add_parser("create", help="capture an ACTIVE post-it")
    c.add_argument("--source-url", required=True)
    c.add_argument("--region", type=_rect, required=True, help="x,y,w,h in [0,1)")
    c.add_argument("--content-ref", required=True)
    c.add_argument("--at", type=int, default=0, help="capture instant (epoch ms)")
    c.set_defaults(func=_cmd_excerpt_create)
    st = ex_sub.add_parser("stick", help="stick a post-it to a notebook page")
    st.add_argument("postit_id")
    st.add_argument("--notebook", dest="notebook_id", required=True)
    st.add_argument("--page", type=int, required=True)
    st.add_argument("--rect", type=_rect, required=True)
    st.set_defaults(func=_cmd_excerpt_stick)
    un = ex_sub.add_parser("unstick", help="reactivate a stuck post-it")
    un.add_argument("postit_id")
    un.set_defaults(func=_cmd_excerpt_unstick)
    al = ex_sub.add_parser("allocate", help="allocate virtual pages for a printout")
    al.add_argument("--document", dest="document_ref", required=True)
    al.add_argument("--pages", type=int, required=True)
    al.add_argument("--regions", help="JSON file of {doc_page, region} anchors")
    al.set_defaults(func=_cmd_excerpt_allocate)
    rv = ex_sub.add_parser("resolve", help="resolve a tap on a printed page")
    rv.add_argument("virtual_page_id", type=int)
    rv.add_argument("x", type=float)
    rv.add_argument("y", type=float)
    rv.set_defaults(func=_cmd_excerpt_resolve)

    p = sub.add_parser("report", help="render session figures and segment data")
    p.add_argument("session_id")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--notebook", dest="notebook_id")
    p.add_argument("--page", type=int)
    p.add_argument("--at", type=int, help="instant for the page render")
    p.set_defaults(func=_cmd_report)

    return parser


def _emit(payload: dict, pretty: bool) -> None:
    if pretty:
        print(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False), flush=True)
    else:
        print(codec.canonical_dumps(payload), flush=True)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        payload = args.func(args)
    except UnoteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"bad input file: {exc}", file=sys.stderr)
        return 1
    if payload is not None:
        _emit(payload, args.pretty)
    return 0


if __name__ == "__main__":
    sys.exit(main())
