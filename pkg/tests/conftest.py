"""Shared fixtures: profile builders, the demo corpus, and live simulators."""

from __future__ import annotations

from datetime import datetime, timezone

import pytest

from sociohub.connectors import ConnectorConfig, make_connector
from sociohub.model import (
    InstagramCredentials,
    MastodonCredentials,
    PlatformId,
    TwitterCredentials,
    UnifiedProfile,
)
from sociohub.ratelimit import PlatformLimiter, RateBudget
from sociohub.simulator import DEFAULT_FIXTURES, FixtureCorpus, load_fixtures, serve

FIXED_TIME = datetime(2024, 7, 15, 12, 0, 0, tzinfo=timezone.utc)


def make_profile(
    platform: str = "twitter",
    handle: str = "ada",
    display_name: str = "Ada",
    bio: str = "",
    followers: int = 0,
    following: int = 0,
    location: str | None = None,
    retrieved_at: datetime = FIXED_TIME,
) -> UnifiedProfile:
    pid = PlatformId.parse(platform)
    if location is None and pid is PlatformId.TWITTER:
        location = "Tempe"
    return UnifiedProfile(
        platform=pid,
        handle=handle,
        display_name=display_name,
        bio=bio,
        followers=followers,
        following=following,
        location=location if pid is PlatformId.TWITTER else None,
        retrieved_at=retrieved_at,
    )


def demo_credentials(platform: PlatformId, base_url: str = ""):
    if platform is PlatformId.TWITTER:
        return TwitterCredentials(
            api_key="demo-api-key",
            api_key_secret="demo-api-key-secret",
            access_token="demo-access-token",
            access_token_secret="demo-access-token-secret",
        )
    if platform is PlatformId.INSTAGRAM:
        return InstagramCredentials(username="demo-user", password="demo-pass")
    return MastodonCredentials(
        access_token="demo-mastodon-token", base_url=base_url or "http://localhost/mastodon"
    )


def connector_for(sim, platform: PlatformId, capacity: int = 1000, **kwargs):
    """A connector aimed at a running simulator, with a roomy test budget."""
    base_url = sim.base_url(platform)
    config = ConnectorConfig(
        platform=platform,
        base_url=base_url,
        credentials=demo_credentials(platform, base_url=base_url),
        timeout=5.0,
    )
    limiter = PlatformLimiter(RateBudget.full(platform, capacity, 1.0, now=0.0), clock=lambda: 0.0)
    kwargs.setdefault("limiter", limiter)
    kwargs.setdefault("now_fn", lambda: FIXED_TIME)
    return make_connector(config, **kwargs)


@pytest.fixture(scope="session")
def demo_corpus() -> FixtureCorpus:
    return load_fixtures(DEFAULT_FIXTURES)


@pytest.fixture(scope="session")
def sim(demo_corpus):
    """Fault-free simulator serving the demo corpus, shared per session."""
    server = serve(demo_corpus)
    yield server
    server.stop()


@pytest.fixture()
def fresh_sim(demo_corpus):
    """Per-test simulator for tests that mutate counters or need isolation."""
    server = serve(demo_corpus)
    yield server
    server.stop()
