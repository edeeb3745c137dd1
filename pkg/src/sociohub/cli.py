"""Command-line interface.

    sociohub simulate --fixtures demo.json --port 8800
    sociohub serve --config sociohub.conf --port 8080
    sociohub search ada --platforms twitter,mastodon --limit 5
    sociohub export 01ARZ... --format csv --out results.csv
    sociohub config check --config sociohub.conf
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__, config as config_mod
from .model import PlatformId, validate_credentials
from .service import InvalidQuery, SearchRequest, ServiceApp, aggregate_search, serve_api
from .simulator import DEFAULT_FIXTURES, ParseError, load_fixtures, serve
from .store import EXPORT_FORMATS


def _add_config_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="config file path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sociohub",
        description="Search one username across three social platforms at once.",
    )
    parser.add_argument("--version", action="version", version=f"sociohub {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the platform simulator")
    sim.add_argument("--fixtures", type=Path, default=DEFAULT_FIXTURES)
    sim.add_argument("--host", default="127.0.0.1")
    sim.add_argument("--port", type=int, default=8800)
    sim.add_argument("--latency-ms", type=int, default=0)

    srv = sub.add_parser("serve", help="run the aggregation service")
    _add_config_arg(srv)
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8080)
    srv.add_argument(
        "--ui-dir",
        type=Path,
        default=None,
        help="static web console bundle (default: ./frontend/dist if present)",
    )

    search = sub.add_parser("search", help="one-shot search, no server needed")
    _add_config_arg(search)
    search.add_argument("query")
    search.add_argument("--platforms", default="", help="comma-separated subset")
    search.add_argument("--limit", type=int, default=None)
    search.add_argument("--threshold", type=float, default=None)
    search.add_argument("--format", choices=("table", "jsonlines"), default="table")

    export = sub.add_parser("export", help="export a stored query record")
    _add_config_arg(export)
    export.add_argument("record_id")
    export.add_argument("--format", choices=EXPORT_FORMATS, default="csv")
    export.add_argument("--out", type=Path, default=None, help="default: stdout")

    check = sub.add_parser("config", help="configuration utilities")
    check_sub = check.add_subparsers(dest="config_command", required=True)
    check_cmd = check_sub.add_parser("check", help="validate per-platform credentials")
    _add_config_arg(check_cmd)

    return parser


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        corpus = load_fixtures(args.fixtures)
    except (OSError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    server = serve(corpus, host=args.host, port=args.port, latency_ms=args.latency_ms)
    sizes = ", ".join(f"{p.value}: {len(corpus.users[p])}" for p in PlatformId)
    print(f"simulator listening on http://{server.host}:{server.port}")
    print(f"fixture users - {sizes}")
    for platform in PlatformId:
        print(f"  {platform.value} base_url: {server.base_url(platform)}")
    try:
        server._thread.join()
    except KeyboardInterrupt:
        server.stop()
    return 0


def _load_app(args: argparse.Namespace, platforms: list[PlatformId] | None = None) -> ServiceApp:
    cfg = config_mod.load_config(args.config)
    connectors = config_mod.connectors_for(cfg, platforms)
    limit, threshold = config_mod.search_defaults(cfg)
    return ServiceApp(
        connectors=connectors,
        query_store=config_mod.store_for(cfg),
        default_limit=limit,
        default_threshold=threshold,
    )


def cmd_serve(args: argparse.Namespace) -> int:
    ui_dir = args.ui_dir
    if ui_dir is None:
        candidate = Path("frontend/dist")
        ui_dir = candidate if candidate.is_dir() else None
    try:
        app = _load_app(args)
    except (OSError, config_mod.ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    app.static_dir = ui_dir
    server = serve_api(app, host=args.host, port=args.port)
    platforms = ", ".join(p.value for p in sorted(app.connectors, key=lambda p: p.order))
    print(f"service listening on {server.url} (platforms: {platforms or 'none'})")
    if ui_dir:
        print(f"web console served from {ui_dir}")
    try:
        server._thread.join()
    except KeyboardInterrupt:
        server.stop()
    return 0


def cmd_search(args: argparse.Namespace) -> int:
    try:
        requested = None
        if args.platforms:
            requested = [PlatformId.parse(p.strip()) for p in args.platforms.split(",")]
        app = _load_app(args, requested)
        request = SearchRequest(
            query=args.query,
            platforms=tuple(requested or sorted(app.connectors, key=lambda p: p.order)),
            limit=args.limit if args.limit is not None else app.default_limit,
            threshold=(
                args.threshold if args.threshold is not None else app.default_threshold
            ),
        )
        result = aggregate_search(request, app.connectors, app.query_store)
    except (OSError, config_mod.ConfigError, InvalidQuery, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    record = result.record

    if args.format == "jsonlines":
        print(json.dumps({"record": record.to_json(), "partial": result.partial}))
        return 0

    print(f"query {record.query!r} -> record {record.id}")
    for platform in record.requested_platforms:
        status = record.statuses[platform]
        if status.is_error:
            print(f"  {platform.value}: ERROR [{status.kind}] {status.detail}")
        else:
            print(f"  {platform.value}: {status.count} result(s)")
    if record.results:
        width = max(len(r.profile.handle) for r in record.results)
        for ranked in record.results:
            p = ranked.profile
            location = f"  ({p.location})" if p.location else ""
            print(
                f"  {ranked.score:0.3f}  {p.platform.value:<9}  "
                f"{p.handle:<{width}}  {p.display_name}  "
                f"[{p.followers} followers]{location}"
            )
    else:
        print("  no matches")
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    cfg = config_mod.load_config(args.config)
    query_store = config_mod.store_for(cfg)
    payload = query_store.export(args.record_id, args.format)
    if payload is None:
        print(f"error: no record {args.record_id}", file=sys.stderr)
        return 1
    if args.out is None:
        sys.stdout.buffer.write(payload)
    else:
        args.out.write_bytes(payload)
        print(f"wrote {len(payload)} bytes to {args.out}")
    return 0


def cmd_config_check(args: argparse.Namespace) -> int:
    cfg = config_mod.load_config(args.config)
    all_ok = True
    for platform in PlatformId:
        creds = config_mod.credentials_for(cfg, platform)
        missing = validate_credentials(creds)
        base_url = config_mod.base_url_for(cfg, platform)
        if missing:
            all_ok = False
        for name in creds.field_names:
            state = "missing" if name in missing else "ok"
            print(f"{platform.value}.{name}: {state}")
        if platform is not PlatformId.MASTODON:
            print(f"{platform.value}.base_url: {'ok' if base_url else 'missing'}")
            if not base_url:
                all_ok = False
    print("configuration ok" if all_ok else "configuration incomplete")
    return 0 if all_ok else 1


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    commands = {
        "simulate": cmd_simulate,
        "serve": cmd_serve,
        "search": cmd_search,
        "export": cmd_export,
    }
    if args.command == "config":
        return cmd_config_check(args)
    return commands[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
