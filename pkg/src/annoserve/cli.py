"""Operator command line: serve, export, stats, validate, qc.

Exit codes: 0 success, 1 operation failed (validation violations,
unknown image, unreadable input), 2 configuration or usage error,
3 storage integrity error. Data goes to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import logging
import socket
import sys
from pathlib import Path

import uvicorn

from . import __version__
from .canonical import canonical_bytes, rfc3339_now
from .coco import load_categories, parse_dataset, serialize_dataset
from .config import load_config
from .errors import ConfigError, DatasetParseError, IntegrityError, NotFoundError, SchemaError, ValidationError
from .service import create_app
from .snapshot import build_snapshot
from .stats import (
    compute_annotator_stats,
    compute_dataset_stats,
    render_annotator_table,
    render_dataset_table,
)
from .storage import QcEvent, Store

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_INTEGRITY = 3


def _err(message: str) -> None:
    print(message, file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="annoserve", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP service until interrupted")
    serve.add_argument("--config", required=True, help="server config JSON path")

    export = sub.add_parser("export", help="write a COCO snapshot of a store")
    export.add_argument("--data", required=True, help="store data directory")
    export.add_argument("--out", required=True, help="output JSON file")
    export.add_argument("--categories", required=True, help="category config JSON path")
    export.add_argument("--approved-only", action="store_true", help="drop pending and disqualified images")

    stats = sub.add_parser("stats", help="print dataset and annotator statistics")
    stats.add_argument("--data", required=True, help="store data directory")
    stats.add_argument("--categories", required=True, help="category config JSON path")
    stats.add_argument("--format", choices=("table", "json"), default="table")
    stats.add_argument("--all", action="store_true", help="count pending/disqualified images too")

    validate = sub.add_parser("validate", help="check a COCO JSON file")
    validate.add_argument("file", help="dataset JSON path")

    qc = sub.add_parser("qc", help="record a review verdict for one image")
    qc.add_argument("--data", required=True, help="store data directory")
    qc.add_argument("--image", required=True, help="image content hash")
    qc.add_argument("--verdict", required=True, choices=("approved", "disqualified"))
    qc.add_argument("--reviewer", required=True, help="reviewer name")
    qc.add_argument("--reason", help="required when disqualifying")

    return parser


def cmd_serve(args: argparse.Namespace) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG

    # Bind before starting uvicorn so a taken port is a clean config error.
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        sock.bind((config.host, config.port))
    except OSError as exc:
        sock.close()
        _err(f"cannot bind {config.host}:{config.port}: {exc}")
        return EXIT_CONFIG
    sock.listen(2048)
    host, port = sock.getsockname()[:2]
    _err(f"listening on {host}:{port}")

    app = create_app(config)
    server = uvicorn.Server(uvicorn.Config(app, log_level="warning"))
    server.run(sockets=[sock])
    return EXIT_OK


def _open_readonly(data_dir: str) -> Store:
    return Store.open(Path(data_dir), writable=False)


def cmd_export(args: argparse.Namespace) -> int:
    try:
        categories = load_categories(Path(args.categories).read_bytes())
    except (OSError, ConfigError, ValidationError) as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    try:
        store = _open_readonly(args.data)
    except ConfigError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    except IntegrityError as exc:
        _err(f"integrity error: {exc}")
        return EXIT_INTEGRITY
    try:
        ds = build_snapshot(store.state, categories, approved_only=args.approved_only)
        data = serialize_dataset(ds)
    except (ConfigError, ValidationError) as exc:
        _err(f"export failed: {exc}")
        return EXIT_FAILED
    Path(args.out).write_bytes(data)
    _err(f"wrote {len(ds.images)} images, {len(ds.annotations)} annotations to {args.out}")
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    try:
        categories = load_categories(Path(args.categories).read_bytes())
    except (OSError, ConfigError, ValidationError) as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    try:
        store = _open_readonly(args.data)
    except ConfigError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    except IntegrityError as exc:
        _err(f"integrity error: {exc}")
        return EXIT_INTEGRITY
    state = store.state
    dataset = compute_dataset_stats(state, categories, approved_only=not args.all)
    rows, footer = compute_annotator_stats(state)
    if args.format == "json":
        doc = {
            "dataset": dataset.to_json(),
            "annotators": [r.to_json() for r in rows],
            "footer": footer.to_json(),
        }
        sys.stdout.buffer.write(canonical_bytes(doc) + b"\n")
    else:
        print(render_dataset_table(dataset))
        print()
        print(render_annotator_table(rows, footer))
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        data = Path(args.file).read_bytes()
    except OSError as exc:
        _err(f"cannot read {args.file}: {exc}")
        return EXIT_FAILED
    try:
        ds = parse_dataset(data)
    except DatasetParseError as exc:
        _err(f"parse error: {exc}")
        return EXIT_FAILED
    except SchemaError as exc:
        _err(f"schema error: {exc}")
        return EXIT_FAILED
    except ValidationError as exc:
        for v in exc.violations:
            _err(f"{v.code}: {v.message}")
        return EXIT_FAILED
    _err(f"OK: {len(ds.images)} images, {len(ds.annotations)} annotations, {len(ds.categories)} categories")
    return EXIT_OK


def cmd_qc(args: argparse.Namespace) -> int:
    if args.verdict == "disqualified" and not args.reason:
        _err("usage error: --reason is required when disqualifying")
        return EXIT_CONFIG
    try:
        store = Store.open(Path(args.data))
    except ConfigError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    except IntegrityError as exc:
        _err(f"integrity error: {exc}")
        return EXIT_INTEGRITY
    with store:
        event = QcEvent(
            image_ref=args.image,
            verdict=args.verdict,
            reviewer=args.reviewer,
            at=rfc3339_now(),
            reason=args.reason,
        )
        try:
            effective = store.append_qc(event)
        except NotFoundError as exc:
            _err(f"error: {exc}")
            return EXIT_FAILED
    print(f"{args.image}: effective verdict {effective.value}")
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    handlers = {
        "serve": cmd_serve,
        "export": cmd_export,
        "stats": cmd_stats,
        "validate": cmd_validate,
        "qc": cmd_qc,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
