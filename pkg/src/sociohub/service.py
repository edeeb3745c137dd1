"""Aggregation service: one query, fanned out to all selected platforms.

`aggregate_search` runs the platform connectors concurrently, folds each
outcome into a per-platform status (a failing platform never blocks the
others), merges the successful profiles into one ranked list, and
persists the resulting QueryRecord before returning. The HTTP layer
exposes search, history, record lookup, and export endpoints plus the
static web console.
"""

from __future__ import annotations

import json
import mimetypes
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any, Mapping
from urllib.parse import parse_qs, urlparse

from . import model
from .connectors import Connector, ConnectorError, error_kind
from .matching import DEFAULT_LIMIT, DEFAULT_THRESHOLD, rank_results
from .model import PlatformId, SchemaError, UnifiedProfile
from .store import (
    EXPORT_FORMATS,
    EXPORT_MEDIA_TYPES,
    PlatformStatus,
    QueryRecord,
    QueryStore,
    StorageError,
)

MAX_SEARCH_LIMIT = 50


class InvalidQuery(ValueError):
    """Search request is malformed (empty query, bad platform/limit...)."""


@dataclass(frozen=True)
class SearchRequest:
    query: str
    platforms: tuple[PlatformId, ...] = tuple(PlatformId)
    limit: int = DEFAULT_LIMIT
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self) -> None:
        if not self.query.strip():
            raise InvalidQuery("query is empty")
        if not self.platforms:
            raise InvalidQuery("at least one platform must be selected")
        if len(set(self.platforms)) != len(self.platforms):
            raise InvalidQuery("duplicate platform selection")
        if not 1 <= self.limit <= MAX_SEARCH_LIMIT:
            raise InvalidQuery(f"limit must be in 1..{MAX_SEARCH_LIMIT}")
        if not 0.0 <= self.threshold <= 1.0:
            raise InvalidQuery("threshold must be in [0, 1]")


@dataclass(frozen=True)
class CrossPlatformResult:
    record: QueryRecord
    partial: bool  # true iff any platform reported an error

    def to_json(self) -> dict[str, Any]:
        return {"record": self.record.to_json(), "partial": self.partial}


def aggregate_search(
    request: SearchRequest,
    connectors: Mapping[PlatformId, Connector],
    query_store: QueryStore,
) -> CrossPlatformResult:
    """Fan out, merge, rank, persist. Returns the persisted record."""
    for platform in request.platforms:
        if platform not in connectors:
            raise InvalidQuery(f"platform {platform.value} is not configured")

    query = request.query.strip()
    created_at = model.utc_now()
    ordered = sorted(request.platforms, key=lambda p: p.order)

    def run_one(platform: PlatformId) -> tuple[PlatformId, list[UnifiedProfile] | Exception]:
        try:
            return platform, connectors[platform].search_users(query, request.limit)
        except (ConnectorError, SchemaError) as exc:
            return platform, exc

    with ThreadPoolExecutor(max_workers=len(ordered)) as pool:
        outcomes = dict(pool.map(run_one, ordered))

    statuses: dict[PlatformId, PlatformStatus] = {}
    merged: list[UnifiedProfile] = []
    for platform in ordered:
        outcome = outcomes[platform]
        if isinstance(outcome, Exception):
            statuses[platform] = PlatformStatus.error(
                error_kind(outcome), str(outcome)
            )
        else:
            statuses[platform] = PlatformStatus.ok(len(outcome))
            merged.extend(outcome)

    results = rank_results(
        query, merged, limit=request.limit * len(ordered), threshold=request.threshold
    )
    # Counts reflect what survived ranking, per the record invariant.
    for platform in ordered:
        if not statuses[platform].is_error:
            statuses[platform] = PlatformStatus.ok(
                sum(1 for r in results if r.profile.platform is platform)
            )

    record = QueryRecord(
        query=query,
        requested_platforms=tuple(ordered),
        created_at=created_at,
        statuses=statuses,
        results=results,
    )
    record_id = query_store.persist_query(record)
    stored = query_store.get_query(record_id)
    assert stored is not None
    partial = any(s.is_error for s in statuses.values())
    return CrossPlatformResult(record=stored, partial=partial)


@dataclass
class ServiceApp:
    """Request-independent service state shared across handler threads."""

    connectors: Mapping[PlatformId, Connector]
    query_store: QueryStore
    default_limit: int = DEFAULT_LIMIT
    default_threshold: float = DEFAULT_THRESHOLD
    static_dir: Path | None = None

    def handle_api(self, method: str, path: str, params: dict[str, list[str]]):
        """Dispatch one API call; returns (status, doc, extra_headers)."""
        parts = [p for p in path.split("/") if p]
        if method == "GET" and parts == ["api", "health"]:
            return 200, self._health(), None
        if method == "GET" and parts == ["api", "search"]:
            return self._search(params)
        if method == "GET" and parts == ["api", "queries"]:
            return self._history(params)
        if method == "GET" and len(parts) == 3 and parts[:2] == ["api", "queries"]:
            return self._get_record(parts[2])
        if method == "GET" and len(parts) == 3 and parts[:2] == ["api", "export"]:
            return self._export(parts[2], params)
        return 404, {"error": "not_found", "detail": f"no route for {path}"}, None

    def _health(self) -> dict[str, Any]:
        configured = sorted(self.connectors, key=lambda p: p.order)
        return {"status": "ok", "platforms_configured": [p.value for p in configured]}

    def _parse_request(self, params: dict[str, list[str]]) -> SearchRequest:
        query = params.get("q", [""])[0]
        platforms_param = params.get("platforms", [""])[0]
        if platforms_param:
            platforms = tuple(
                PlatformId.parse(p.strip()) for p in platforms_param.split(",") if p.strip()
            )
        else:
            platforms = tuple(sorted(self.connectors, key=lambda p: p.order))
        limit = int(params.get("limit", [str(self.default_limit)])[0])
        threshold = float(params.get("threshold", [str(self.default_threshold)])[0])
        return SearchRequest(
            query=query, platforms=platforms, limit=limit, threshold=threshold
        )

    def _search(self, params: dict[str, list[str]]):
        try:
            request = self._parse_request(params)
        except (ValueError, KeyError) as exc:
            return 400, {"error": "invalid_query", "detail": str(exc)}, None
        try:
            result = aggregate_search(request, self.connectors, self.query_store)
        except InvalidQuery as exc:
            return 400, {"error": "invalid_query", "detail": str(exc)}, None
        except StorageError as exc:
            return 500, {"error": "storage_error", "detail": str(exc)}, None
        return 200, result.to_json(), None

    def _history(self, params: dict[str, list[str]]):
        try:
            offset = int(params.get("offset", ["0"])[0])
            page_size = int(params.get("page_size", ["50"])[0])
            total, page = self.query_store.list_queries(offset, page_size)
        except ValueError as exc:
            return 400, {"error": "invalid_query", "detail": str(exc)}, None
        except StorageError as exc:
            return 500, {"error": "storage_error", "detail": str(exc)}, None
        return 200, {"total": total, "queries": page}, None

    def _get_record(self, record_id: str):
        try:
            record = self.query_store.get_query(record_id)
        except StorageError as exc:
            return 500, {"error": "storage_error", "detail": str(exc)}, None
        if record is None:
            return 404, {"error": "not_found", "detail": f"no record {record_id}"}, None
        return 200, record.to_json(), None

    def _export(self, record_id: str, params: dict[str, list[str]]):
        format = params.get("format", ["jsonlines"])[0]
        if format not in EXPORT_FORMATS:
            return 400, {"error": "invalid_query", "detail": f"unknown format {format}"}, None
        try:
            payload = self.query_store.export(record_id, format)
        except StorageError as exc:
            return 500, {"error": "storage_error", "detail": str(exc)}, None
        if payload is None:
            return 404, {"error": "not_found", "detail": f"no record {record_id}"}, None
        extension = "csv" if format == "csv" else "ndjson"
        headers = {
            "Content-Type": EXPORT_MEDIA_TYPES[format],
            "Content-Disposition": f'attachment; filename="sociohub-{record_id}.{extension}"',
        }
        return 200, payload, headers


def _make_handler(app: ServiceApp) -> type[BaseHTTPRequestHandler]:
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, format: str, *args: Any) -> None:
            pass

        def do_GET(self) -> None:
            url = urlparse(self.path)
            if url.path.startswith("/api/"):
                status, doc, extra = app.handle_api("GET", url.path, parse_qs(url.query))
                if isinstance(doc, bytes):
                    self._send(status, doc, extra or {})
                else:
                    body = json.dumps(doc, ensure_ascii=False).encode("utf-8")
                    headers = {"Content-Type": "application/json; charset=utf-8"}
                    headers.update(extra or {})
                    self._send(status, body, headers)
                return
            self._static(url.path)

        def _static(self, path: str) -> None:
            if app.static_dir is None:
                self._send(
                    200,
                    b"sociohub service is running; the API lives under /api/\n",
                    {"Content-Type": "text/plain; charset=utf-8"},
                )
                return
            name = path.lstrip("/") or "index.html"
            target = (app.static_dir / name).resolve()
            root = app.static_dir.resolve()
            if root not in target.parents and target != root:
                self._send(404, b"not found\n", {"Content-Type": "text/plain"})
                return
            if not target.is_file():
                # SPA fallback: unknown paths get the shell page.
                target = root / "index.html"
                if not target.is_file():
                    self._send(404, b"not found\n", {"Content-Type": "text/plain"})
                    return
            content_type = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
            self._send(200, target.read_bytes(), {"Content-Type": content_type})

        def _send(self, status: int, body: bytes, headers: dict[str, str]) -> None:
            self.send_response(status)
            for name, value in headers.items():
                self.send_header(name, value)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

    return Handler


class ServiceServer:
    """Running HTTP service handle."""

    def __init__(self, app: ServiceApp, host: str = "127.0.0.1", port: int = 8080):
        self.app = app
        self._httpd = ThreadingHTTPServer((host, port), _make_handler(app))
        self._httpd.daemon_threads = True
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)

    def start(self) -> "ServiceServer":
        self._thread.start()
        return self

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        self._thread.join(timeout=5)

    def __enter__(self) -> "ServiceServer":
        return self

    def __exit__(self, *exc_info: Any) -> None:
        self.stop()


def serve_api(
    app: ServiceApp, host: str = "127.0.0.1", port: int = 8080
) -> ServiceServer:
    return ServiceServer(app, host, port).start()
