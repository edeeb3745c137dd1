"""Configuration: flat key=value files with environment overrides.

Example file:

    # credentials
    twitter.api_key = demo-api-key
    twitter.api_key_secret = demo-api-key-secret
    twitter.access_token = demo-access-token
    twitter.access_token_secret = demo-access-token-secret
    twitter.base_url = http://127.0.0.1:8800/twitter
    instagram.username = demo-user
    instagram.password = demo-pass
    instagram.base_url = http://127.0.0.1:8800/instagram
    mastodon.access_token = demo-mastodon-token
    mastodon.base_url = http://127.0.0.1:8800/mastodon

    store.backend = file          # file | docdb
    store.path = sociohub-data/queries.jsonl
    rate.twitter.capacity = 15
    rate.twitter.window_seconds = 900
    search.limit = 10
    search.threshold = 0.3

Any key can be overridden by an environment variable named
SOCIOHUB_<KEY> with dots replaced by underscores and upper-cased, e.g.
SOCIOHUB_TWITTER_API_KEY. Credential values are never logged.
"""

from __future__ import annotations

import os
import time
from pathlib import Path
from typing import Mapping

from .connectors import Connector, ConnectorConfig, make_connector
from .matching import DEFAULT_LIMIT, DEFAULT_THRESHOLD
from .model import (
    CredentialSet,
    InstagramCredentials,
    MastodonCredentials,
    PlatformId,
    TwitterCredentials,
    validate_credentials,
)
from .ratelimit import DEFAULT_LIMITS, PlatformLimiter, RateBudget
from .store import QueryStore, open_store

ENV_PREFIX = "SOCIOHUB_"

DEFAULTS = {
    "store.backend": "file",
    "store.path": "sociohub-data/queries.jsonl",
    "search.limit": str(DEFAULT_LIMIT),
    "search.threshold": str(DEFAULT_THRESHOLD),
    "http.timeout_seconds": "10",
}

_CREDENTIAL_FIELDS: dict[PlatformId, tuple[str, ...]] = {
    PlatformId.TWITTER: TwitterCredentials.field_names,
    PlatformId.INSTAGRAM: InstagramCredentials.field_names,
    PlatformId.MASTODON: MastodonCredentials.field_names,
}


def known_config_keys() -> list[str]:
    """Every documented configuration key."""
    keys = list(DEFAULTS)
    for platform in PlatformId:
        keys.extend(f"{platform.value}.{name}" for name in _CREDENTIAL_FIELDS[platform])
        if platform is not PlatformId.MASTODON:  # mastodon's lives in its credentials
            keys.append(f"{platform.value}.base_url")
        keys.append(f"rate.{platform.value}.capacity")
        keys.append(f"rate.{platform.value}.window_seconds")
    keys.append("ui.dir")
    return keys


_ENV_TO_KEY = {
    ENV_PREFIX + key.upper().replace(".", "_"): key for key in known_config_keys()
}


class ConfigError(ValueError):
    """Config file is malformed or a value fails to parse."""


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    values: dict[str, str] = {}
    for line_no, raw_line in enumerate(text.splitlines(), 1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{line_no}: expected key = value")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def load_config(
    path: str | Path | None = None, env: Mapping[str, str] | None = None
) -> dict[str, str]:
    """Merged configuration: defaults, then file, then environment."""
    values = dict(DEFAULTS)
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        values.update(parse_config_text(text, source=str(path)))
    env = os.environ if env is None else env
    for name, value in env.items():
        key = _ENV_TO_KEY.get(name)
        if key is not None:
            values[key] = value
    return values


def credentials_for(config: Mapping[str, str], platform: PlatformId) -> CredentialSet:
    """Build the platform's credential set from config (fields may be empty)."""
    fields = {
        name: config.get(f"{platform.value}.{name}", "")
        for name in _CREDENTIAL_FIELDS[platform]
    }
    if platform is PlatformId.TWITTER:
        return TwitterCredentials(**fields)
    if platform is PlatformId.INSTAGRAM:
        return InstagramCredentials(**fields)
    return MastodonCredentials(**fields)


def configured_platforms(config: Mapping[str, str]) -> list[PlatformId]:
    """Platforms with complete credentials and a base URL."""
    ready = []
    for platform in PlatformId:
        if not validate_credentials(credentials_for(config, platform)) and base_url_for(
            config, platform
        ):
            ready.append(platform)
    return ready


def base_url_for(config: Mapping[str, str], platform: PlatformId) -> str:
    url = config.get(f"{platform.value}.base_url", "")
    return url.rstrip("/")


def _float_key(config: Mapping[str, str], key: str, default: float) -> float:
    raw = config.get(key)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None


def limiter_for(config: Mapping[str, str], platform: PlatformId) -> PlatformLimiter:
    default_capacity, default_window = DEFAULT_LIMITS[platform]
    capacity = _float_key(config, f"rate.{platform.value}.capacity", default_capacity)
    window = _float_key(
        config, f"rate.{platform.value}.window_seconds", default_window
    )
    if capacity < 1 or window <= 0:
        raise ConfigError(f"rate.{platform.value}: invalid capacity/window")
    return PlatformLimiter(
        RateBudget.full(platform, int(capacity), window, now=time.monotonic())
    )


def connectors_for(
    config: Mapping[str, str], platforms: list[PlatformId] | None = None, **kwargs
) -> dict[PlatformId, Connector]:
    """One connector per configured (or requested) platform."""
    selected = configured_platforms(config) if platforms is None else platforms
    timeout = _float_key(config, "http.timeout_seconds", 10.0)
    connectors: dict[PlatformId, Connector] = {}
    for platform in selected:
        creds = credentials_for(config, platform)
        missing = validate_credentials(creds)
        if missing:
            raise ConfigError(
                f"{platform.value}: missing credential fields: {', '.join(missing)}"
            )
        base_url = base_url_for(config, platform)
        if platform is PlatformId.MASTODON:
            base_url = base_url or creds.base_url.rstrip("/")
        if not base_url:
            raise ConfigError(f"{platform.value}.base_url is not configured")
        connector_config = ConnectorConfig(
            platform=platform, base_url=base_url, credentials=creds, timeout=timeout
        )
        connectors[platform] = make_connector(
            connector_config, limiter=limiter_for(config, platform), **kwargs
        )
    return connectors


def store_for(config: Mapping[str, str]) -> QueryStore:
    return open_store(config["store.backend"], config["store.path"])


def search_defaults(config: Mapping[str, str]) -> tuple[int, float]:
    limit = int(_float_key(config, "search.limit", DEFAULT_LIMIT))
    threshold = _float_key(config, "search.threshold", DEFAULT_THRESHOLD)
    return limit, threshold
