"""Acceptance suite: one test per release criterion, hermetic and loopback-only.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS line
per criterion.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import random

import pytest
import requests

from sociohub.matching import rank_results
from sociohub.model import (
    InstagramCredentials,
    MastodonCredentials,
    PlatformId,
    SchemaError,
    TwitterCredentials,
    UnifiedProfile,
    normalize_profile,
    validate_credentials,
)
from sociohub.ratelimit import Granted, RateBudget, RetryAfter, acquire
from sociohub.service import ServiceApp, serve_api
from sociohub.simulator import (
    FaultPlan,
    PlatformFaults,
    RateLimitFault,
    serve,
    simulate_search,
)
from sociohub.store import FileStore

from .conftest import FIXED_TIME, connector_for
from .oracles import brute_force_rank
from .test_matching import _random_corpus

PRIVATE_FLAGS = {"protected", "is_private", "locked"}


def fixture_handles(corpus, platform):
    from sociohub.model import handle_field

    return [raw[handle_field(platform)] for raw in corpus.users[platform]]


def private_pairs(corpus):
    from sociohub.model import handle_field

    pairs = set()
    for platform in PlatformId:
        for raw in corpus.users[platform]:
            if any(raw.get(flag) for flag in PRIVATE_FLAGS):
                pairs.add((platform.value, raw[handle_field(platform)]))
    return pairs


@pytest.fixture(scope="module")
def stack(demo_corpus, tmp_path_factory):
    """Simulator + service + store over the default demo corpus."""
    sim = serve(demo_corpus)
    app = ServiceApp(
        connectors={p: connector_for(sim, p) for p in PlatformId},
        query_store=FileStore(tmp_path_factory.mktemp("acceptance") / "queries.jsonl"),
    )
    api = serve_api(app, port=0)
    yield sim, api
    api.stop()
    sim.stop()


def test_normalization_totality(demo_corpus, stack):
    """Every demo-corpus profile normalizes with zero SchemaErrors;
    twitter profiles and only twitter profiles carry location."""
    sim, _ = stack
    connectors = {p: connector_for(sim, p) for p in PlatformId}
    normalized = 0

    # Through the wire: every public profile must come back through its
    # connector when queried by its own handle.
    for platform in PlatformId:
        retrieved: dict[str, UnifiedProfile] = {}
        for handle in fixture_handles(demo_corpus, platform):
            for profile in connectors[platform].search_users(handle, 50):
                retrieved[profile.handle] = profile
        public = {
            h
            for h in fixture_handles(demo_corpus, platform)
            if (platform.value, h) not in private_pairs(demo_corpus)
        }
        assert set(retrieved) == public
        for profile in retrieved.values():
            if platform is PlatformId.TWITTER:
                assert profile.location, f"twitter profile {profile.handle} lacks location"
            else:
                assert profile.location is None
            normalized += 1

    # Off the wire payloads directly, so private profiles are covered too.
    for platform in PlatformId:
        for handle in fixture_handles(demo_corpus, platform):
            payload = json.loads(simulate_search(demo_corpus, platform, handle, 50))
            raw_users = (
                payload
                if platform is PlatformId.TWITTER
                else payload["users"] if platform is PlatformId.INSTAGRAM else payload["accounts"]
            )
            for raw in raw_users:
                profile = normalize_profile(platform, raw, FIXED_TIME)  # no SchemaError
                assert (profile.location is not None) == (
                    platform is PlatformId.TWITTER
                )

    assert normalized >= 80  # ~30 users x 3 platforms, minus private ones
    print(f"\nACCEPTANCE PASS: normalization totality ({normalized} public profiles)")


def test_ranking_oracle_equivalence():
    """>= 1000 randomized trials where rank_results exactly equals the
    brute-force oracle, tie-break chains included. 0 mismatches."""
    rng = random.Random(2024)
    trials = 1000
    mismatches = 0
    for _ in range(trials):
        corpus = _random_corpus(rng, max_size=50)
        query = "".join(rng.choice("abcde") for _ in range(rng.randrange(1, 7)))
        limit = rng.randrange(1, 60)
        threshold = rng.choice([0.0, 0.3, 0.5, 0.8])
        actual = [
            (r.profile, r.score)
            for r in rank_results(query, corpus, limit=limit, threshold=threshold)
        ]
        expected = brute_force_rank(query, corpus, limit=limit, threshold=threshold)
        if actual != expected:
            mismatches += 1
    assert mismatches == 0
    print(f"\nACCEPTANCE PASS: ranking oracle equivalence ({trials} trials, 0 mismatches)")


def test_rate_limiter_exactness():
    """capacity 5 / window 10 s under a fake clock: 5 grants, then two
    RetryAfter(2.0); grants resume after 10 s; conservation holds over
    10 000 random call sequences."""
    budget = RateBudget.full(PlatformId.TWITTER, 5, 10.0, now=0.0)
    outcomes = []
    for _ in range(7):
        outcome, budget = acquire(budget, 0.0)
        outcomes.append(outcome)
    assert outcomes[:5] == [Granted()] * 5
    assert outcomes[5] == RetryAfter(2.0)
    assert outcomes[6] == RetryAfter(2.0)
    outcome, budget = acquire(budget, 10.0)
    assert outcome == Granted()

    rng = random.Random(99)
    sequences = 10_000
    for _ in range(sequences):
        capacity = rng.randrange(1, 7)
        window = rng.choice([1.0, 4.0, 10.0])
        b = RateBudget.full(PlatformId.MASTODON, capacity, window, now=0.0)
        now = 0.0
        granted = 0
        for _ in range(rng.randrange(1, 15)):
            now += rng.random() * rng.choice([0.2, 1.0, 4.0])
            outcome, b = acquire(b, now)
            granted += isinstance(outcome, Granted)
        assert granted <= capacity + b.refill_rate * now + 1e-9
    print(f"\nACCEPTANCE PASS: rate limiter exactness (+ conservation over {sequences} sequences)")


def test_end_to_end_search_persist_export(stack):
    """/api/search?q=ada: all-ok statuses, results from three platforms,
    retrievable record, csv export with result-count+1 lines that parses
    back losslessly."""
    _, api = stack
    doc = requests.get(f"{api.url}/api/search", params={"q": "ada"}, timeout=10).json()
    record = doc["record"]
    assert doc["partial"] is False
    assert set(record["statuses"]) == {"twitter", "instagram", "mastodon"}
    assert all(s["state"] == "ok" for s in record["statuses"].values())
    assert {r["profile"]["platform"] for r in record["results"]} == {
        "twitter",
        "instagram",
        "mastodon",
    }

    stored = requests.get(f"{api.url}/api/queries/{record['id']}", timeout=5).json()
    assert stored == record

    export = requests.get(
        f"{api.url}/api/export/{record['id']}", params={"format": "csv"}, timeout=5
    )
    text = export.content.decode("utf-8")
    lines = text.splitlines()
    assert len(lines) == len(record["results"]) + 1

    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == [
        "query_id", "query", "platform", "handle", "display_name",
        "bio", "followers", "following", "location", "retrieved_at",
    ]
    for row, ranked in zip(rows[1:], record["results"]):
        profile = ranked["profile"]
        assert row == [
            record["id"],
            record["query"],
            profile["platform"],
            profile["handle"],
            profile["display_name"],
            profile["bio"],
            str(profile["followers"]),
            str(profile["following"]),
            profile.get("location", ""),
            profile["retrieved_at"],
        ]
    print(f"\nACCEPTANCE PASS: end-to-end search/persist/export ({len(rows) - 1} rows)")


def test_partial_failure_isolation(demo_corpus, tmp_path):
    """A 429 fault on one platform yields RateLimited with the injected
    retry-after there, byte-identical results elsewhere, partial=true."""
    faulty_corpus = dataclasses.replace(
        demo_corpus,
        faults=FaultPlan(
            {
                PlatformId.MASTODON: PlatformFaults(
                    rate_limit=RateLimitFault(
                        capacity=0, window_seconds=60, retry_after_seconds=15
                    )
                )
            }
        ),
    )

    def run(corpus, name):
        with serve(corpus) as sim:
            app = ServiceApp(
                connectors={p: connector_for(sim, p) for p in PlatformId},
                query_store=FileStore(tmp_path / name),
            )
            with serve_api(app, port=0) as api:
                return requests.get(
                    f"{api.url}/api/search", params={"q": "ada"}, timeout=10
                ).json()

    clean = run(demo_corpus, "clean.jsonl")
    faulted = run(faulty_corpus, "faulty.jsonl")

    assert faulted["partial"] is True
    status = faulted["record"]["statuses"]["mastodon"]
    assert status == {"state": "error", "kind": "rate_limited", "detail": "retry after 15s"}

    def platform_bytes(doc, platform):
        subset = [r for r in doc["record"]["results"] if r["profile"]["platform"] == platform]
        return json.dumps(subset, ensure_ascii=False).encode("utf-8")

    for platform in ("twitter", "instagram"):
        assert platform_bytes(clean, platform) == platform_bytes(faulted, platform)
        assert faulted["record"]["statuses"][platform]["state"] == "ok"
    print("\nACCEPTANCE PASS: partial failure isolation (mastodon 429, others byte-identical)")


def test_privacy_filter_no_leaks(demo_corpus, stack):
    """Fixtures flagged private never appear in any API response or
    export, across a full-corpus query sweep."""
    _, api = stack
    private = private_pairs(demo_corpus)
    assert private, "demo corpus must include private fixtures"

    seen: set[tuple[str, str]] = set()
    record_ids = []
    for platform in PlatformId:
        for handle in fixture_handles(demo_corpus, platform):
            doc = requests.get(
                f"{api.url}/api/search",
                params={"q": handle, "limit": 50, "threshold": 0.0},
                timeout=10,
            ).json()
            record_ids.append(doc["record"]["id"])
            for ranked in doc["record"]["results"]:
                seen.add((ranked["profile"]["platform"], ranked["profile"]["handle"]))

    leaks = seen & private
    assert leaks == set()

    for record_id in record_ids:
        text = requests.get(
            f"{api.url}/api/export/{record_id}", params={"format": "csv"}, timeout=5
        ).content.decode("utf-8")
        for row in list(csv.reader(io.StringIO(text)))[1:]:
            assert (row[2], row[3]) not in private
        for line in (
            requests.get(
                f"{api.url}/api/export/{record_id}",
                params={"format": "jsonlines"},
                timeout=5,
            )
            .content.decode("utf-8")
            .splitlines()[1:]
        ):
            profile = json.loads(line)
            assert (profile["platform"], profile["handle"]) not in private

    print(
        f"\nACCEPTANCE PASS: privacy filter (0 leaks of {len(private)} private fixtures "
        f"over {len(record_ids)} queries + exports)"
    )


def test_credential_validation_matrix():
    """All 3 platforms x each single-missing-field -> Missing([field]);
    complete sets -> ok. Exact."""
    complete = {
        PlatformId.TWITTER: TwitterCredentials(
            api_key="k", api_key_secret="s", access_token="t", access_token_secret="ts"
        ),
        PlatformId.INSTAGRAM: InstagramCredentials(username="u", password="p"),
        PlatformId.MASTODON: MastodonCredentials(
            access_token="t", base_url="https://example.social"
        ),
    }
    cases = 0
    for platform, creds in complete.items():
        assert validate_credentials(creds) == [], platform
        cases += 1
        for name in creds.field_names:
            broken = type(creds)(
                **{
                    f: ("" if f == name else getattr(creds, f))
                    for f in creds.field_names
                }
            )
            assert validate_credentials(broken) == [name], (platform, name)
            cases += 1
    print(f"\nACCEPTANCE PASS: credential validation matrix ({cases} cases exact)")
