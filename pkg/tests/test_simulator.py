from __future__ import annotations

import json

import pytest
import requests

from sociohub.model import PlatformId
from sociohub.simulator import (
    DuplicateHandle,
    FaultPlan,
    FixtureCorpus,
    ParseError,
    load_fixtures,
    serve,
    simulate_search,
)

from .conftest import demo_credentials


def write_fixture(tmp_path, doc) -> str:
    path = tmp_path / "fixtures.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def mastodon_user(handle, display="", note="", followers=0, following=0, **extra):
    doc = {
        "display_name": display,
        "username": handle,
        "note": note,
        "followers_count": followers,
        "following_count": following,
    }
    doc.update(extra)
    return doc


def twitter_user(handle, display="", location="Tempe", followers=0, **extra):
    doc = {
        "name": display,
        "screen_name": handle,
        "description": "",
        "followers_count": followers,
        "friends_count": 0,
        "location": location,
    }
    doc.update(extra)
    return doc


class TestLoadFixtures:
    def test_minimal_single_user_file(self, tmp_path):
        path = write_fixture(tmp_path, {"mastodon": [mastodon_user("a")]})
        corpus = load_fixtures(path)
        assert len(corpus.users[PlatformId.MASTODON]) == 1
        assert corpus.users[PlatformId.TWITTER] == []
        assert corpus.faults.for_platform(PlatformId.MASTODON).rate_limit is None

    def test_duplicate_handle_rejected(self, tmp_path):
        path = write_fixture(
            tmp_path, {"twitter": [twitter_user("ada"), twitter_user("ada")]}
        )
        with pytest.raises(DuplicateHandle, match="ada"):
            load_fixtures(path)

    def test_negative_count_rejected(self, tmp_path):
        path = write_fixture(
            tmp_path, {"twitter": [twitter_user("ada", followers=-1)]}
        )
        with pytest.raises(ParseError, match="followers_count"):
            load_fixtures(path)

    def test_syntax_error_reports_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{\n  "twitter": [,]\n}', encoding="utf-8")
        with pytest.raises(ParseError, match="line 2"):
            load_fixtures(str(path))

    def test_unknown_field_rejected(self, tmp_path):
        path = write_fixture(
            tmp_path, {"mastodon": [mastodon_user("a", folowers_count=3)]}
        )
        with pytest.raises(ParseError, match="folowers_count"):
            load_fixtures(path)

    def test_non_boolean_privacy_flag_rejected(self, tmp_path):
        path = write_fixture(tmp_path, {"mastodon": [mastodon_user("a", locked="yes")]})
        with pytest.raises(ParseError, match="locked"):
            load_fixtures(path)

    def test_fault_plan_parsed(self, tmp_path):
        path = write_fixture(
            tmp_path,
            {
                "mastodon": [mastodon_user("a")],
                "faults": {
                    "mastodon": {
                        "rate_limit": {
                            "capacity": 5,
                            "window_seconds": 60,
                            "retry_after_seconds": 15,
                        },
                        "latency_ms": 20,
                        "fail_requests": [3],
                    }
                },
            },
        )
        faults = load_fixtures(path).faults.for_platform(PlatformId.MASTODON)
        assert faults.rate_limit.capacity == 5
        assert faults.rate_limit.retry_after_seconds == 15
        assert faults.latency_ms == 20
        assert faults.fail_requests == frozenset({3})

    def test_zero_retry_after_rejected(self, tmp_path):
        path = write_fixture(
            tmp_path,
            {"faults": {"twitter": {"rate_limit": {"capacity": 1, "retry_after_seconds": 0}}}},
        )
        with pytest.raises(ParseError, match="retry_after_seconds"):
            load_fixtures(path)

    def test_demo_corpus_loads_with_thirty_users_per_platform(self):
        from sociohub.simulator import DEFAULT_FIXTURES

        corpus = load_fixtures(DEFAULT_FIXTURES)
        for platform in PlatformId:
            assert len(corpus.users[platform]) == 30


def simple_corpus() -> FixtureCorpus:
    return FixtureCorpus(
        users={
            PlatformId.TWITTER: [
                twitter_user("ada", display="Ada"),
                twitter_user("adam", display="Adam"),
                twitter_user("bob", display="Bob"),
            ],
            PlatformId.INSTAGRAM: [],
            PlatformId.MASTODON: [],
        },
        credentials={p: demo_credentials(p) for p in PlatformId},
        faults=FaultPlan(),
    )


class TestSimulateSearch:
    def test_substring_recall_in_handle_order(self):
        payload = json.loads(simulate_search(simple_corpus(), PlatformId.TWITTER, "ada", 10))
        assert [u["screen_name"] for u in payload] == ["ada", "adam"]

    def test_display_name_also_searched(self):
        payload = json.loads(simulate_search(simple_corpus(), PlatformId.TWITTER, "BO", 10))
        assert [u["screen_name"] for u in payload] == ["bob"]

    def test_no_match_is_empty_payload(self):
        assert json.loads(simulate_search(simple_corpus(), PlatformId.TWITTER, "zzz", 10)) == []

    def test_truncation_after_handle_sort(self):
        payload = json.loads(simulate_search(simple_corpus(), PlatformId.TWITTER, "ada", 1))
        assert [u["screen_name"] for u in payload] == ["ada"]

    def test_dialect_wrappers(self, demo_corpus):
        instagram = json.loads(simulate_search(demo_corpus, PlatformId.INSTAGRAM, "ada", 5))
        mastodon = json.loads(simulate_search(demo_corpus, PlatformId.MASTODON, "ada", 5))
        assert set(instagram) == {"users"}
        assert set(mastodon) == {"accounts"}

    def test_empty_query_rejected(self):
        with pytest.raises(ValueError):
            simulate_search(simple_corpus(), PlatformId.TWITTER, "", 10)

    def test_deterministic_bytes(self, demo_corpus):
        first = simulate_search(demo_corpus, PlatformId.MASTODON, "ada", 10)
        second = simulate_search(demo_corpus, PlatformId.MASTODON, "ada", 10)
        assert first == second


class TestServer:
    def test_mastodon_wrong_bearer_is_401(self, sim):
        response = requests.get(
            f"{sim.base_url(PlatformId.MASTODON)}/api/v2/search",
            params={"q": "ada", "type": "accounts", "limit": 5},
            headers={"Authorization": "Bearer wrong"},
            timeout=5,
        )
        assert response.status_code == 401

    def test_twitter_auth_header_enforced(self, sim):
        url = f"{sim.base_url(PlatformId.TWITTER)}/1.1/users/search.json"
        ok = requests.get(
            url,
            params={"q": "ada", "count": 5},
            headers={"Authorization": "OAuth demo-api-key:demo-access-token"},
            timeout=5,
        )
        bad = requests.get(
            url,
            params={"q": "ada", "count": 5},
            headers={"Authorization": "OAuth nope:nope"},
            timeout=5,
        )
        assert ok.status_code == 200
        assert bad.status_code == 401

    def test_instagram_session_flow(self, sim):
        base = sim.base_url(PlatformId.INSTAGRAM)
        session = requests.post(
            base + "/session",
            json={"username": "demo-user", "password": "demo-pass"},
            timeout=5,
        )
        assert session.status_code == 200
        token = session.json()["session_token"]
        found = requests.get(
            base + "/search/users",
            params={"query": "ada", "count": 5},
            headers={"X-Session": token},
            timeout=5,
        )
        assert found.status_code == 200
        assert {"users"} == set(found.json())

        rejected = requests.post(
            base + "/session",
            json={"username": "demo-user", "password": "wrong"},
            timeout=5,
        )
        assert rejected.status_code == 401

    def test_counters_track_every_request_including_faulted(self, fresh_sim):
        url = f"{fresh_sim.base_url(PlatformId.TWITTER)}/1.1/users/search.json"
        requests.get(url, headers={"Authorization": "OAuth bad:bad"}, timeout=5)
        requests.get(
            url,
            params={"q": "ada", "count": 2},
            headers={"Authorization": "OAuth demo-api-key:demo-access-token"},
            timeout=5,
        )
        counters = requests.get(
            f"http://{fresh_sim.host}:{fresh_sim.port}/_admin/counters", timeout=5
        ).json()
        assert counters["twitter"] == 2
        assert counters["instagram"] == 0

    def test_admin_reset_zeroes_counters(self, fresh_sim):
        url = f"{fresh_sim.base_url(PlatformId.MASTODON)}/api/v2/search"
        requests.get(url, params={"q": "a", "limit": 1}, timeout=5)
        requests.post(f"http://{fresh_sim.host}:{fresh_sim.port}/_admin/reset", timeout=5)
        counters = requests.get(
            f"http://{fresh_sim.host}:{fresh_sim.port}/_admin/counters", timeout=5
        ).json()
        assert counters == {"twitter": 0, "instagram": 0, "mastodon": 0}

    def test_unknown_path_is_404(self, sim):
        assert (
            requests.get(f"http://{sim.host}:{sim.port}/nonsense", timeout=5).status_code
            == 404
        )


class TestFaultInjection:
    def test_rate_limit_fault_emits_429_with_retry_after(self, demo_corpus, tmp_path):
        doc = {
            "mastodon": [mastodon_user("ada")],
            "faults": {
                "mastodon": {
                    "rate_limit": {
                        "capacity": 5,
                        "window_seconds": 3600,
                        "retry_after_seconds": 15,
                    }
                }
            },
        }
        corpus = load_fixtures(write_fixture(tmp_path, doc))
        with serve(corpus) as sim:
            url = f"{sim.base_url(PlatformId.MASTODON)}/api/v2/search"
            headers = {"Authorization": "Bearer demo-mastodon-token"}
            statuses = [
                requests.get(
                    url, params={"q": "ada", "limit": 1}, headers=headers, timeout=5
                )
                for _ in range(6)
            ]
            assert [r.status_code for r in statuses[:5]] == [200] * 5
            assert statuses[5].status_code == 429
            assert statuses[5].headers["Retry-After"] == "15"

    def test_fail_requests_injects_500_at_index(self, tmp_path):
        doc = {
            "twitter": [twitter_user("ada")],
            "faults": {"twitter": {"fail_requests": [2]}},
        }
        corpus = load_fixtures(write_fixture(tmp_path, doc))
        with serve(corpus) as sim:
            url = f"{sim.base_url(PlatformId.TWITTER)}/1.1/users/search.json"
            headers = {"Authorization": "OAuth demo-api-key:demo-access-token"}
            first = requests.get(url, params={"q": "ada", "count": 1}, headers=headers, timeout=5)
            second = requests.get(url, params={"q": "ada", "count": 1}, headers=headers, timeout=5)
            third = requests.get(url, params={"q": "ada", "count": 1}, headers=headers, timeout=5)
            assert [first.status_code, second.status_code, third.status_code] == [200, 500, 200]

    def test_fail_auth_fault_rejects_valid_credentials(self, tmp_path):
        doc = {
            "mastodon": [mastodon_user("ada")],
            "faults": {"mastodon": {"fail_auth": True}},
        }
        corpus = load_fixtures(write_fixture(tmp_path, doc))
        with serve(corpus) as sim:
            response = requests.get(
                f"{sim.base_url(PlatformId.MASTODON)}/api/v2/search",
                params={"q": "ada", "limit": 1},
                headers={"Authorization": "Bearer demo-mastodon-token"},
                timeout=5,
            )
            assert response.status_code == 401
