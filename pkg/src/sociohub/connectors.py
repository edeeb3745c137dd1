"""Per-platform search connectors behind one uniform contract.

Each connector speaks its platform's wire dialect (URL path, auth
scheme, payload shape), maps HTTP failures into the closed error
taxonomy below, consumes exactly one rate-limiter token per search, and
filters out profiles the wire payload flags as private. Successful
responses come back as UnifiedProfile lists, all stamped with the same
retrieval timestamp.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from typing import Any, Callable, Mapping

import requests

from . import model
from .model import (
    CredentialSet,
    InstagramCredentials,
    MastodonCredentials,
    PlatformId,
    SchemaError,
    TwitterCredentials,
    UnifiedProfile,
    normalize_profile,
    validate_credentials,
)
from .ratelimit import PlatformLimiter, RetryAfter, default_limiter

MAX_LIMIT = 50
DEFAULT_RETRY_AFTER = 60.0


class ConnectorError(Exception):
    """Base of the closed error taxonomy connectors may raise."""

    kind = "connector_error"


class AuthError(ConnectorError):
    kind = "auth_error"


class RateLimited(ConnectorError):
    kind = "rate_limited"

    def __init__(self, retry_after: float):
        if retry_after <= 0:
            raise ValueError("retry_after must be positive")
        super().__init__(f"retry after {retry_after:g}s")
        self.retry_after = retry_after


class NotFound(ConnectorError):
    kind = "not_found"


class NetworkError(ConnectorError):
    kind = "network_error"


def error_kind(exc: Exception) -> str:
    """Status tag for an exception out of the connector taxonomy."""
    if isinstance(exc, ConnectorError):
        return exc.kind
    if isinstance(exc, SchemaError):
        return "schema_error"
    raise TypeError(f"not a connector error: {exc!r}")


def classify_error(status: int, headers: Mapping[str, str], body: bytes) -> ConnectorError:
    """Map an HTTP failure status onto the connector error taxonomy."""
    if status in (401, 403):
        return AuthError(f"status {status}")
    if status == 429:
        return RateLimited(_retry_after_seconds(headers))
    if status == 404:
        return NotFound(f"status {status}")
    return NetworkError(f"status {status}")


def _retry_after_seconds(headers: Mapping[str, str]) -> float:
    value = None
    for name, header in headers.items():
        if name.lower() == "retry-after":
            value = header
            break
    if value is None:
        return DEFAULT_RETRY_AFTER
    try:
        seconds = float(value)
    except (TypeError, ValueError):
        return DEFAULT_RETRY_AFTER
    return seconds if seconds > 0 else DEFAULT_RETRY_AFTER


@dataclass(frozen=True)
class ConnectorConfig:
    platform: PlatformId
    base_url: str
    credentials: CredentialSet
    timeout: float = 10.0

    def __post_init__(self) -> None:
        if self.credentials.platform is not self.platform:
            raise ValueError(
                f"credentials are for {self.credentials.platform.value}, "
                f"connector is {self.platform.value}"
            )
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if isinstance(self.credentials, MastodonCredentials):
            if self.base_url.rstrip("/") != self.credentials.base_url.rstrip("/"):
                raise ValueError("mastodon base_url must match the credential base_url")


class Connector:
    """Uniform 'search users with these credentials' contract.

    Subclasses implement `_fetch_raw` for their dialect; everything
    else (rate budgeting, error mapping, privacy filtering,
    normalization) is shared.
    """

    platform: PlatformId

    def __init__(
        self,
        config: ConnectorConfig,
        limiter: PlatformLimiter | None = None,
        session: requests.Session | None = None,
        now_fn: Callable[[], datetime] = model.utc_now,
    ):
        if config.platform is not self.platform:
            raise ValueError(f"config is for {config.platform.value}")
        missing = validate_credentials(config.credentials)
        if missing:
            raise ValueError(f"incomplete credentials: missing {', '.join(missing)}")
        self.config = config
        self.limiter = limiter if limiter is not None else default_limiter(self.platform)
        self._session = session if session is not None else requests.Session()
        self._now_fn = now_fn

    def search_users(self, query: str, limit: int = 10) -> list[UnifiedProfile]:
        query = query.strip()
        if not query:
            raise ValueError("query must be non-empty")
        if not 1 <= limit <= MAX_LIMIT:
            raise ValueError(f"limit must be in 1..{MAX_LIMIT}")

        outcome = self.limiter.try_acquire()
        if isinstance(outcome, RetryAfter):
            raise RateLimited(outcome.seconds)

        raw_users = self._fetch_raw(query, limit)
        if not isinstance(raw_users, list) or not all(
            isinstance(raw, dict) for raw in raw_users
        ):
            raise SchemaError(f"{self.platform.value}: expected a list of user objects")
        retrieved_at = self._now_fn()
        profiles = [
            normalize_profile(self.platform, raw, retrieved_at)
            for raw in raw_users
            if not model.is_private(self.platform, raw)
        ]
        return profiles[:limit]

    def _fetch_raw(self, query: str, limit: int) -> list[dict[str, Any]]:
        raise NotImplementedError

    def _get(self, url: str, *, params: dict, headers: dict) -> Any:
        return self._exchange("GET", url, params=params, headers=headers)

    def _exchange(self, method: str, url: str, **kwargs: Any) -> Any:
        try:
            response = self._session.request(
                method, url, timeout=self.config.timeout, **kwargs
            )
        except requests.RequestException as exc:
            raise NetworkError(f"transport failure: {exc}") from exc
        if response.status_code >= 400:
            error = classify_error(
                response.status_code, response.headers, response.content
            )
            if isinstance(error, RateLimited):
                self.limiter.observe_server_limit(error.retry_after)
            raise error
        try:
            return response.json()
        except ValueError as exc:
            raise SchemaError(f"{self.platform.value}: undecodable payload") from exc


class TwitterConnector(Connector):
    platform = PlatformId.TWITTER

    def _fetch_raw(self, query: str, limit: int) -> list[dict[str, Any]]:
        creds = self.config.credentials
        assert isinstance(creds, TwitterCredentials)
        return self._get(
            f"{self.config.base_url.rstrip('/')}/1.1/users/search.json",
            params={"q": query, "count": limit},
            headers={"Authorization": f"OAuth {creds.api_key}:{creds.access_token}"},
        )


class InstagramConnector(Connector):
    platform = PlatformId.INSTAGRAM

    def _fetch_raw(self, query: str, limit: int) -> list[dict[str, Any]]:
        creds = self.config.credentials
        assert isinstance(creds, InstagramCredentials)
        base = self.config.base_url.rstrip("/")
        # Session bootstrap: exchange username/password for a short-lived
        # token, then search with it. Both requests ride on the single
        # token acquired for this search call.
        session_doc = self._exchange(
            "POST",
            f"{base}/session",
            json={"username": creds.username, "password": creds.password},
        )
        token = session_doc.get("session_token") if isinstance(session_doc, dict) else None
        if not isinstance(token, str) or not token:
            raise SchemaError("instagram: session response lacks session_token")
        doc = self._get(
            f"{base}/search/users",
            params={"query": query, "count": limit},
            headers={"X-Session": token},
        )
        if not isinstance(doc, dict) or "users" not in doc:
            raise SchemaError("instagram: response lacks 'users'")
        return doc["users"]


class MastodonConnector(Connector):
    platform = PlatformId.MASTODON

    def _fetch_raw(self, query: str, limit: int) -> list[dict[str, Any]]:
        creds = self.config.credentials
        assert isinstance(creds, MastodonCredentials)
        doc = self._get(
            f"{self.config.base_url.rstrip('/')}/api/v2/search",
            params={"q": query, "type": "accounts", "limit": limit},
            headers={"Authorization": f"Bearer {creds.access_token}"},
        )
        if not isinstance(doc, dict) or "accounts" not in doc:
            raise SchemaError("mastodon: response lacks 'accounts'")
        return doc["accounts"]


_CONNECTOR_CLASSES: dict[PlatformId, type[Connector]] = {
    PlatformId.TWITTER: TwitterConnector,
    PlatformId.INSTAGRAM: InstagramConnector,
    PlatformId.MASTODON: MastodonConnector,
}


def make_connector(
    config: ConnectorConfig,
    limiter: PlatformLimiter | None = None,
    session: requests.Session | None = None,
    now_fn: Callable[[], datetime] = model.utc_now,
) -> Connector:
    cls = _CONNECTOR_CLASSES[config.platform]
    return cls(config, limiter=limiter, session=session, now_fn=now_fn)
