"""Unified profile schema, per-platform raw payloads, and credentials.

Every platform speaks its own field names on the wire; this module maps
those raw shapes onto one five-attribute profile (handle, display name,
bio, followers, following). Twitter additionally contributes an optional
location. All types here are immutable values and all functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Any
from urllib.parse import urlparse


class SchemaError(ValueError):
    """A raw payload does not match its platform's declared shape."""


class PlatformId(str, Enum):
    """The three supported platforms, in canonical order."""

    TWITTER = "twitter"
    INSTAGRAM = "instagram"
    MASTODON = "mastodon"

    @classmethod
    def parse(cls, value: str) -> "PlatformId":
        try:
            return cls(value)
        except ValueError:
            raise ValueError(f"unknown platform: {value!r}") from None

    @property
    def order(self) -> int:
        """Index in canonical order: twitter < instagram < mastodon."""
        return _CANONICAL_ORDER[self]


_CANONICAL_ORDER = {
    PlatformId.TWITTER: 0,
    PlatformId.INSTAGRAM: 1,
    PlatformId.MASTODON: 2,
}

TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


def utc_now() -> datetime:
    """Current UTC time at seconds precision (profile timestamp resolution)."""
    return datetime.now(timezone.utc).replace(microsecond=0)


def format_timestamp(ts: datetime) -> str:
    """ISO-8601 UTC with trailing Z, seconds precision."""
    if ts.tzinfo is None:
        raise ValueError("timestamp must be timezone-aware")
    return ts.astimezone(timezone.utc).strftime(TIMESTAMP_FORMAT)


def parse_timestamp(text: str) -> datetime:
    return datetime.strptime(text, TIMESTAMP_FORMAT).replace(tzinfo=timezone.utc)


@dataclass(frozen=True)
class UnifiedProfile:
    """One user profile in the normalized cross-platform schema.

    The five core attributes (handle, display_name, bio, followers,
    following) are always present; location is populated only for
    twitter profiles and is absent (None) elsewhere.
    """

    platform: PlatformId
    handle: str
    display_name: str
    bio: str
    followers: int
    following: int
    retrieved_at: datetime
    location: str | None = None

    def __post_init__(self) -> None:
        if not self.handle:
            raise ValueError("handle must be non-empty")
        if self.followers < 0 or self.following < 0:
            raise ValueError("follower/following counts must be non-negative")
        if self.location is not None and self.platform is not PlatformId.TWITTER:
            raise ValueError("location is a twitter-only attribute")
        if self.retrieved_at.tzinfo is None:
            raise ValueError("retrieved_at must be timezone-aware")

    def to_json(self) -> dict[str, Any]:
        """Canonical serialized form; location omitted when absent."""
        doc: dict[str, Any] = {
            "platform": self.platform.value,
            "handle": self.handle,
            "display_name": self.display_name,
            "bio": self.bio,
            "followers": self.followers,
            "following": self.following,
        }
        if self.location is not None:
            doc["location"] = self.location
        doc["retrieved_at"] = format_timestamp(self.retrieved_at)
        return doc

    @classmethod
    def from_json(cls, doc: dict[str, Any]) -> "UnifiedProfile":
        return cls(
            platform=PlatformId.parse(doc["platform"]),
            handle=doc["handle"],
            display_name=doc["display_name"],
            bio=doc["bio"],
            followers=doc["followers"],
            following=doc["following"],
            location=doc.get("location"),
            retrieved_at=parse_timestamp(doc["retrieved_at"]),
        )


# Raw wire shapes, keyed by platform: (raw_field, unified_field) pairs in
# the order each platform documents them. This single table drives both
# normalize_profile and platform_field_map.
_FIELD_MAPS: dict[PlatformId, tuple[tuple[str, str], ...]] = {
    PlatformId.TWITTER: (
        ("name", "display_name"),
        ("screen_name", "handle"),
        ("description", "bio"),
        ("followers_count", "followers"),
        ("friends_count", "following"),
        ("location", "location"),
    ),
    PlatformId.INSTAGRAM: (
        ("full_name", "display_name"),
        ("username", "handle"),
        ("biography", "bio"),
        ("followers", "followers"),
        ("followees", "following"),
    ),
    PlatformId.MASTODON: (
        ("display_name", "display_name"),
        ("username", "handle"),
        ("note", "bio"),
        ("followers_count", "followers"),
        ("following_count", "following"),
    ),
}

_COUNT_FIELDS = {"followers", "following"}

# Per-dialect boolean flag marking a non-public profile; absent means public.
PRIVACY_FLAGS: dict[PlatformId, str] = {
    PlatformId.TWITTER: "protected",
    PlatformId.INSTAGRAM: "is_private",
    PlatformId.MASTODON: "locked",
}


def platform_field_map(platform: PlatformId) -> list[tuple[str, str]]:
    """Ordered (raw_field, unified_field) pairs for one platform."""
    return list(_FIELD_MAPS[platform])


def raw_field_names(platform: PlatformId) -> list[str]:
    return [raw for raw, _ in _FIELD_MAPS[platform]]


def handle_field(platform: PlatformId) -> str:
    """Name of the raw field that carries the handle on this platform."""
    for raw, unified in _FIELD_MAPS[platform]:
        if unified == "handle":
            return raw
    raise KeyError(platform)


def normalize_profile(
    platform: PlatformId, raw: dict[str, Any], retrieved_at: datetime
) -> UnifiedProfile:
    """Map one raw platform payload onto the unified schema.

    Raises SchemaError when a required field is missing, a string field
    is not a string, or a count is negative or non-integral. An empty
    twitter location maps to an absent location.
    """
    values: dict[str, Any] = {}
    for raw_field, unified_field in _FIELD_MAPS[platform]:
        if raw_field not in raw:
            raise SchemaError(f"{platform.value}: missing field {raw_field!r}")
        value = raw[raw_field]
        if unified_field in _COUNT_FIELDS:
            if isinstance(value, bool) or not isinstance(value, int):
                raise SchemaError(
                    f"{platform.value}: field {raw_field!r} must be an integer, "
                    f"got {value!r}"
                )
            if value < 0:
                raise SchemaError(
                    f"{platform.value}: field {raw_field!r} must be non-negative"
                )
        else:
            if not isinstance(value, str):
                raise SchemaError(
                    f"{platform.value}: field {raw_field!r} must be a string, "
                    f"got {type(value).__name__}"
                )
        values[unified_field] = value

    if not values["handle"]:
        raise SchemaError(
            f"{platform.value}: field {handle_field(platform)!r} must be non-empty"
        )
    if values.get("location") == "":
        del values["location"]
    return UnifiedProfile(platform=platform, retrieved_at=retrieved_at, **values)


def is_private(platform: PlatformId, raw: dict[str, Any]) -> bool:
    """True when the wire payload flags this profile as non-public."""
    return bool(raw.get(PRIVACY_FLAGS[platform], False))


def _is_absolute_url(value: str) -> bool:
    parsed = urlparse(value)
    return bool(parsed.scheme and parsed.netloc)


@dataclass(frozen=True)
class TwitterCredentials:
    api_key: str
    api_key_secret: str
    access_token: str
    access_token_secret: str

    platform = PlatformId.TWITTER
    field_names = ("api_key", "api_key_secret", "access_token", "access_token_secret")


@dataclass(frozen=True)
class InstagramCredentials:
    username: str
    password: str

    platform = PlatformId.INSTAGRAM
    field_names = ("username", "password")


@dataclass(frozen=True)
class MastodonCredentials:
    access_token: str
    base_url: str

    platform = PlatformId.MASTODON
    field_names = ("access_token", "base_url")


CredentialSet = TwitterCredentials | InstagramCredentials | MastodonCredentials


def validate_credentials(creds: CredentialSet) -> list[str]:
    """Names of missing/invalid credential fields, in declaration order.

    An empty list means the credential set is complete. Mastodon's
    base_url must additionally parse as an absolute URL.
    """
    missing = [name for name in creds.field_names if not getattr(creds, name)]
    if (
        isinstance(creds, MastodonCredentials)
        and creds.base_url
        and not _is_absolute_url(creds.base_url)
    ):
        missing.append("base_url")
    return missing
