"""Hermetic mock of the three platform APIs.

One process serves all three wire dialects under path prefixes
(/twitter, /instagram, /mastodon), enforcing the fixture corpus's
accepted credentials and fault plan (auth failures, 429 rate limits,
injected latency, per-request 500s). Request counters are exposed under
/_admin/counters so tests can assert exactly how much traffic a client
produced.

The simulator's own search is deliberately dumber than the client-side
ranking: plain case-folded substring containment, ordered by handle.
That separation keeps server recall and client ranking observable as
two different things.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from hashlib import sha256
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any
from urllib.parse import parse_qs, urlparse

from .model import (
    CredentialSet,
    InstagramCredentials,
    MastodonCredentials,
    PlatformId,
    PRIVACY_FLAGS,
    TwitterCredentials,
    handle_field,
    raw_field_names,
)

DEFAULT_FIXTURES = Path(__file__).parent / "fixtures" / "demo.json"

# Accepted when a fixture file omits a platform's credentials entry.
DEFAULT_CREDENTIALS: dict[PlatformId, CredentialSet] = {
    PlatformId.TWITTER: TwitterCredentials(
        api_key="demo-api-key",
        api_key_secret="demo-api-key-secret",
        access_token="demo-access-token",
        access_token_secret="demo-access-token-secret",
    ),
    PlatformId.INSTAGRAM: InstagramCredentials(
        username="demo-user", password="demo-pass"
    ),
    # base_url is a placeholder: the wire check only compares tokens, the
    # real base URL is wherever this simulator is bound.
    PlatformId.MASTODON: MastodonCredentials(
        access_token="demo-mastodon-token", base_url="http://localhost/mastodon"
    ),
}


class ParseError(ValueError):
    """Fixture file is syntactically or semantically invalid."""


class DuplicateHandle(ParseError):
    """Two fixture users on one platform share a handle."""


class BindError(OSError):
    """The simulator could not bind its listen address."""


@dataclass(frozen=True)
class RateLimitFault:
    capacity: int
    window_seconds: float
    retry_after_seconds: float


@dataclass(frozen=True)
class PlatformFaults:
    rate_limit: RateLimitFault | None = None
    fail_auth: bool = False
    latency_ms: int = 0
    fail_requests: frozenset[int] = frozenset()


@dataclass(frozen=True)
class FaultPlan:
    per_platform: dict[PlatformId, PlatformFaults] = field(default_factory=dict)

    def for_platform(self, platform: PlatformId) -> PlatformFaults:
        return self.per_platform.get(platform, PlatformFaults())


@dataclass(frozen=True)
class FixtureCorpus:
    users: dict[PlatformId, list[dict[str, Any]]]
    credentials: dict[PlatformId, CredentialSet]
    faults: FaultPlan


def _check_user(platform: PlatformId, index: int, raw: Any) -> None:
    where = f"{platform.value}[{index}]"
    if not isinstance(raw, dict):
        raise ParseError(f"{where}: expected an object")
    required = raw_field_names(platform)
    flag = PRIVACY_FLAGS[platform]
    for name in required:
        if name not in raw:
            raise ParseError(f"{where}: missing field {name!r}")
    for name, value in raw.items():
        if name == flag:
            if not isinstance(value, bool):
                raise ParseError(f"{where}: field {name!r} must be a boolean")
        elif name not in required:
            raise ParseError(f"{where}: unknown field {name!r}")
        elif name.endswith(("_count", "followers", "followees")):
            if isinstance(value, bool) or not isinstance(value, int):
                raise ParseError(f"{where}: field {name!r} must be an integer")
            if value < 0:
                raise ParseError(f"{where}: field {name!r} must be non-negative")
        elif not isinstance(value, str):
            raise ParseError(f"{where}: field {name!r} must be a string")
    if not raw[handle_field(platform)]:
        raise ParseError(f"{where}: field {handle_field(platform)!r} must be non-empty")


def _parse_credentials(doc: Any) -> dict[PlatformId, CredentialSet]:
    credentials = dict(DEFAULT_CREDENTIALS)
    if doc is None:
        return credentials
    if not isinstance(doc, dict):
        raise ParseError("credentials: expected an object")
    classes = {
        PlatformId.TWITTER: TwitterCredentials,
        PlatformId.INSTAGRAM: InstagramCredentials,
        PlatformId.MASTODON: MastodonCredentials,
    }
    for key, entry in doc.items():
        try:
            platform = PlatformId.parse(key)
        except ValueError as exc:
            raise ParseError(f"credentials: {exc}") from None
        if not isinstance(entry, dict):
            raise ParseError(f"credentials.{key}: expected an object")
        cls = classes[platform]
        fields = dict(entry)
        if platform is PlatformId.MASTODON:
            fields.setdefault("base_url", "http://localhost/mastodon")
        try:
            credentials[platform] = cls(**fields)
        except TypeError as exc:
            raise ParseError(f"credentials.{key}: {exc}") from None
    return credentials


def _parse_faults(doc: Any) -> FaultPlan:
    if doc is None:
        return FaultPlan()
    if not isinstance(doc, dict):
        raise ParseError("faults: expected an object")
    per_platform: dict[PlatformId, PlatformFaults] = {}
    for key, entry in doc.items():
        try:
            platform = PlatformId.parse(key)
        except ValueError as exc:
            raise ParseError(f"faults: {exc}") from None
        if not isinstance(entry, dict):
            raise ParseError(f"faults.{key}: expected an object")
        rate_limit = None
        if entry.get("rate_limit") is not None:
            rl = entry["rate_limit"]
            try:
                rate_limit = RateLimitFault(
                    capacity=int(rl["capacity"]),
                    window_seconds=float(rl.get("window_seconds", 60)),
                    retry_after_seconds=float(rl.get("retry_after_seconds", 60)),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"faults.{key}.rate_limit: {exc}") from None
            if rate_limit.capacity < 0 or rate_limit.window_seconds <= 0:
                raise ParseError(f"faults.{key}.rate_limit: invalid capacity/window")
            if rate_limit.retry_after_seconds <= 0:
                raise ParseError(
                    f"faults.{key}.rate_limit: retry_after_seconds must be positive"
                )
        latency_ms = entry.get("latency_ms", 0)
        if isinstance(latency_ms, bool) or not isinstance(latency_ms, int) or latency_ms < 0:
            raise ParseError(f"faults.{key}: latency_ms must be a non-negative integer")
        fail_requests = entry.get("fail_requests", [])
        if not isinstance(fail_requests, list) or not all(
            isinstance(i, int) and not isinstance(i, bool) and i >= 1
            for i in fail_requests
        ):
            raise ParseError(f"faults.{key}: fail_requests must be 1-based indices")
        unknown = set(entry) - {"rate_limit", "fail_auth", "latency_ms", "fail_requests"}
        if unknown:
            raise ParseError(f"faults.{key}: unknown fields {sorted(unknown)}")
        per_platform[platform] = PlatformFaults(
            rate_limit=rate_limit,
            fail_auth=bool(entry.get("fail_auth", False)),
            latency_ms=latency_ms,
            fail_requests=frozenset(fail_requests),
        )
    return FaultPlan(per_platform)


def load_fixtures(path: str | Path) -> FixtureCorpus:
    """Parse and validate a fixture file (see README for the format)."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ParseError("top level: expected an object")
    known = {p.value for p in PlatformId} | {"credentials", "faults"}
    unknown = set(doc) - known
    if unknown:
        raise ParseError(f"top level: unknown keys {sorted(unknown)}")

    users: dict[PlatformId, list[dict[str, Any]]] = {}
    for platform in PlatformId:
        entries = doc.get(platform.value, [])
        if not isinstance(entries, list):
            raise ParseError(f"{platform.value}: expected an array")
        seen: set[str] = set()
        for index, raw in enumerate(entries):
            _check_user(platform, index, raw)
            handle = raw[handle_field(platform)]
            if handle in seen:
                raise DuplicateHandle(f"{platform.value}: duplicate handle {handle!r}")
            seen.add(handle)
        users[platform] = entries

    return FixtureCorpus(
        users=users,
        credentials=_parse_credentials(doc.get("credentials")),
        faults=_parse_faults(doc.get("faults")),
    )


def _display_field(platform: PlatformId) -> str:
    return {
        PlatformId.TWITTER: "name",
        PlatformId.INSTAGRAM: "full_name",
        PlatformId.MASTODON: "display_name",
    }[platform]


def _matches(platform: PlatformId, raw: dict[str, Any], query: str) -> bool:
    folded = query.casefold()
    return (
        folded in raw[handle_field(platform)].casefold()
        or folded in raw[_display_field(platform)].casefold()
    )


def simulate_search(
    corpus: FixtureCorpus, platform: PlatformId, query: str, limit: int
) -> bytes:
    """Dialect-shaped payload for one search: substring recall, handle order."""
    if not query:
        raise ValueError("query must be non-empty")
    hits = [
        raw
        for raw in corpus.users[platform]
        if _matches(platform, raw, query)
    ]
    hits.sort(key=lambda raw: raw[handle_field(platform)])
    hits = hits[: max(0, limit)]
    ordered = [_ordered_user(platform, raw) for raw in hits]
    if platform is PlatformId.TWITTER:
        payload: Any = ordered
    elif platform is PlatformId.INSTAGRAM:
        payload = {"users": ordered}
    else:
        payload = {"accounts": ordered}
    return json.dumps(payload, ensure_ascii=False).encode("utf-8")


def _ordered_user(platform: PlatformId, raw: dict[str, Any]) -> dict[str, Any]:
    ordered = {name: raw[name] for name in raw_field_names(platform)}
    flag = PRIVACY_FLAGS[platform]
    if flag in raw:
        ordered[flag] = raw[flag]
    return ordered


def _session_token(creds: InstagramCredentials) -> str:
    digest = sha256(f"{creds.username}:{creds.password}".encode("utf-8")).hexdigest()
    return f"sess-{digest[:32]}"


class _PlatformState:
    """Mutable per-platform serving state: counter and fault bucket."""

    def __init__(self, faults: PlatformFaults):
        self.faults = faults
        self.counter = 0
        self.tokens = float(faults.rate_limit.capacity) if faults.rate_limit else 0.0
        self.last_refill = time.monotonic()

    def next_index(self) -> int:
        self.counter += 1
        return self.counter

    def rate_limited(self) -> bool:
        rl = self.faults.rate_limit
        if rl is None:
            return False
        if rl.capacity == 0:
            return True
        now = time.monotonic()
        rate = rl.capacity / rl.window_seconds
        self.tokens = min(float(rl.capacity), self.tokens + rate * (now - self.last_refill))
        self.last_refill = now
        if self.tokens >= 1.0:
            self.tokens -= 1.0
            return False
        return True

    def reset(self) -> None:
        self.counter = 0
        if self.faults.rate_limit:
            self.tokens = float(self.faults.rate_limit.capacity)
        self.last_refill = time.monotonic()


class SimulatorServer:
    """Running simulator handle: address, counters, reset, stop."""

    def __init__(self, corpus: FixtureCorpus, host: str, port: int, latency_ms: int = 0):
        self.corpus = corpus
        self.global_latency_ms = latency_ms
        self._lock = threading.Lock()
        self._state = {p: _PlatformState(corpus.faults.for_platform(p)) for p in PlatformId}
        handler = _make_handler(self)
        try:
            self._httpd = ThreadingHTTPServer((host, port), handler)
        except OSError as exc:
            raise BindError(f"cannot bind {host}:{port}: {exc}") from exc
        self._httpd.daemon_threads = True
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)

    def start(self) -> "SimulatorServer":
        self._thread.start()
        return self

    @property
    def host(self) -> str:
        return self._httpd.server_address[0]

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    def base_url(self, platform: PlatformId) -> str:
        return f"http://{self.host}:{self.port}/{platform.value}"

    def counters(self) -> dict[str, int]:
        with self._lock:
            return {p.value: self._state[p].counter for p in PlatformId}

    def reset(self) -> None:
        with self._lock:
            for state in self._state.values():
                state.reset()

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        self._thread.join(timeout=5)

    def __enter__(self) -> "SimulatorServer":
        return self

    def __exit__(self, *exc_info: Any) -> None:
        self.stop()

    # Request-side hooks, called from handler threads.

    def begin_request(self, platform: PlatformId) -> tuple[int, PlatformFaults]:
        with self._lock:
            state = self._state[platform]
            return state.next_index(), state.faults

    def check_rate_limit(self, platform: PlatformId) -> bool:
        with self._lock:
            return self._state[platform].rate_limited()


def _make_handler(sim: SimulatorServer) -> type[BaseHTTPRequestHandler]:
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, format: str, *args: Any) -> None:
            pass

        def do_GET(self) -> None:
            self._route("GET")

        def do_POST(self) -> None:
            self._route("POST")

        def _route(self, method: str) -> None:
            url = urlparse(self.path)
            parts = [p for p in url.path.split("/") if p]
            if not parts:
                self._json(404, {"error": "not found"})
                return
            if parts[0] == "_admin":
                self._admin(method, parts)
                return
            try:
                platform = PlatformId.parse(parts[0])
            except ValueError:
                self._json(404, {"error": "not found"})
                return
            self._platform_request(method, platform, parts[1:], url.query)

        def _admin(self, method: str, parts: list[str]) -> None:
            if method == "GET" and parts[1:] == ["counters"]:
                self._json(200, sim.counters())
            elif method == "POST" and parts[1:] == ["reset"]:
                sim.reset()
                self._json(200, {"status": "reset"})
            else:
                self._json(404, {"error": "not found"})

        def _platform_request(
            self, method: str, platform: PlatformId, parts: list[str], query: str
        ) -> None:
            index, faults = sim.begin_request(platform)
            latency_ms = max(faults.latency_ms, sim.global_latency_ms)
            if latency_ms:
                time.sleep(latency_ms / 1000.0)
            if index in faults.fail_requests:
                self._json(500, {"error": "injected failure"})
                return
            if sim.check_rate_limit(platform):
                retry_after = faults.rate_limit.retry_after_seconds
                self._json(
                    429,
                    {"error": "rate limited"},
                    extra={"Retry-After": f"{retry_after:g}"},
                )
                return
            if platform is PlatformId.TWITTER:
                self._twitter(method, parts, query, faults)
            elif platform is PlatformId.INSTAGRAM:
                self._instagram(method, parts, query, faults)
            else:
                self._mastodon(method, parts, query, faults)

        def _twitter(
            self, method: str, parts: list[str], query: str, faults: PlatformFaults
        ) -> None:
            creds = sim.corpus.credentials[PlatformId.TWITTER]
            assert isinstance(creds, TwitterCredentials)
            expected = f"OAuth {creds.api_key}:{creds.access_token}"
            if faults.fail_auth or self.headers.get("Authorization") != expected:
                self._json(401, {"error": "unauthorized"})
                return
            if method == "GET" and parts == ["1.1", "users", "search.json"]:
                self._search(PlatformId.TWITTER, query)
            else:
                self._json(404, {"error": "not found"})

        def _instagram(
            self, method: str, parts: list[str], query: str, faults: PlatformFaults
        ) -> None:
            creds = sim.corpus.credentials[PlatformId.INSTAGRAM]
            assert isinstance(creds, InstagramCredentials)
            if method == "POST" and parts == ["session"]:
                doc = self._read_json()
                ok = (
                    isinstance(doc, dict)
                    and doc.get("username") == creds.username
                    and doc.get("password") == creds.password
                )
                if faults.fail_auth or not ok:
                    self._json(401, {"error": "bad credentials"})
                    return
                self._json(200, {"session_token": _session_token(creds)})
                return
            if method == "GET" and parts == ["search", "users"]:
                if faults.fail_auth or self.headers.get("X-Session") != _session_token(creds):
                    self._json(401, {"error": "unauthorized"})
                    return
                self._search(PlatformId.INSTAGRAM, query)
                return
            self._json(404, {"error": "not found"})

        def _mastodon(
            self, method: str, parts: list[str], query: str, faults: PlatformFaults
        ) -> None:
            creds = sim.corpus.credentials[PlatformId.MASTODON]
            assert isinstance(creds, MastodonCredentials)
            expected = f"Bearer {creds.access_token}"
            if faults.fail_auth or self.headers.get("Authorization") != expected:
                self._json(401, {"error": "unauthorized"})
                return
            if method == "GET" and parts == ["api", "v2", "search"]:
                self._search(PlatformId.MASTODON, query)
            else:
                self._json(404, {"error": "not found"})

        def _search(self, platform: PlatformId, query: str) -> None:
            params = parse_qs(query)
            if platform is PlatformId.TWITTER:
                term = params.get("q", [""])[0]
                count = params.get("count", ["10"])[0]
            elif platform is PlatformId.INSTAGRAM:
                term = params.get("query", [""])[0]
                count = params.get("count", ["10"])[0]
            else:
                term = params.get("q", [""])[0]
                count = params.get("limit", ["10"])[0]
            try:
                limit = int(count)
            except ValueError:
                self._json(400, {"error": "bad count"})
                return
            if not term:
                self._json(400, {"error": "missing query"})
                return
            body = simulate_search(sim.corpus, platform, term, limit)
            self._raw(200, body)

        def _read_json(self) -> Any:
            length = int(self.headers.get("Content-Length") or 0)
            body = self.rfile.read(length) if length else b""
            try:
                return json.loads(body)
            except json.JSONDecodeError:
                return None

        def _json(self, status: int, doc: Any, extra: dict[str, str] | None = None) -> None:
            self._raw(status, json.dumps(doc, ensure_ascii=False).encode("utf-8"), extra)

        def _raw(self, status: int, body: bytes, extra: dict[str, str] | None = None) -> None:
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            for name, value in (extra or {}).items():
                self.send_header(name, value)
            self.end_headers()
            self.wfile.write(body)

    return Handler


def serve(
    corpus: FixtureCorpus,
    host: str = "127.0.0.1",
    port: int = 0,
    latency_ms: int = 0,
) -> SimulatorServer:
    """Bind and start the simulator; returns the running handle."""
    return SimulatorServer(corpus, host, port, latency_ms=latency_ms).start()
