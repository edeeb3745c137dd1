"""Per-platform token-bucket budgets with server-limit synchronization.

The bucket math is purely functional: `acquire` and `observe_server_limit`
take a budget and an explicit monotonic instant and return a new budget,
so every property is deterministic under a fake clock. `PlatformLimiter`
owns one budget behind a lock and supplies real time for the connectors.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, replace
from typing import Callable

from .model import PlatformId

# Plausible public-API magnitudes; not normative. Overridable via the
# rate.<platform>.capacity / rate.<platform>.window_seconds config keys.
DEFAULT_LIMITS: dict[PlatformId, tuple[int, float]] = {
    PlatformId.TWITTER: (15, 900.0),
    PlatformId.INSTAGRAM: (30, 600.0),
    PlatformId.MASTODON: (300, 300.0),
}


class ClockRegression(ValueError):
    """`now` moved backwards relative to the budget's last refill."""


@dataclass(frozen=True)
class Granted:
    """A token was consumed; the request may proceed."""


@dataclass(frozen=True)
class RetryAfter:
    """No token available; retry after `seconds`."""

    seconds: float

    def __post_init__(self) -> None:
        if self.seconds <= 0:
            raise ValueError("RetryAfter must be positive")


AcquireOutcome = Granted | RetryAfter


@dataclass(frozen=True)
class RateBudget:
    """Token-bucket state for one platform."""

    platform: PlatformId
    capacity: int
    refill_rate: float  # tokens per second
    tokens: float
    last_refill: float  # monotonic instant
    server_block_until: float | None = None

    def __post_init__(self) -> None:
        if self.capacity < 1:
            raise ValueError("capacity must be positive")
        if self.refill_rate <= 0:
            raise ValueError("refill_rate must be positive")
        if not 0 <= self.tokens <= self.capacity:
            raise ValueError("tokens must be within [0, capacity]")

    @classmethod
    def full(
        cls, platform: PlatformId, capacity: int, window_seconds: float, now: float = 0.0
    ) -> "RateBudget":
        """A full bucket that refills completely over `window_seconds`."""
        return cls(
            platform=platform,
            capacity=capacity,
            refill_rate=capacity / window_seconds,
            tokens=float(capacity),
            last_refill=now,
        )


def _refill(budget: RateBudget, now: float) -> RateBudget:
    if now < budget.last_refill:
        raise ClockRegression(
            f"now={now} precedes last_refill={budget.last_refill}"
        )
    tokens = min(
        float(budget.capacity),
        budget.tokens + budget.refill_rate * (now - budget.last_refill),
    )
    block = budget.server_block_until
    if block is not None and block <= now:
        block = None
    return replace(budget, tokens=tokens, last_refill=now, server_block_until=block)


def acquire(budget: RateBudget, now: float) -> tuple[AcquireOutcome, RateBudget]:
    """Try to take one token at instant `now`.

    Refills first, then honors any active server block, then spends a
    token if one is available. On denial the returned RetryAfter is the
    exact wait until the next token (or until the block lifts).
    """
    budget = _refill(budget, now)
    if budget.server_block_until is not None:
        return RetryAfter(budget.server_block_until - now), budget
    if budget.tokens >= 1.0:
        return Granted(), replace(budget, tokens=budget.tokens - 1.0)
    return RetryAfter((1.0 - budget.tokens) / budget.refill_rate), budget


def observe_server_limit(
    budget: RateBudget, retry_after: float, now: float
) -> RateBudget:
    """Fold a server-reported limit (HTTP 429 Retry-After) into the budget.

    The block only ever extends; tokens drop to zero as of `now`.
    """
    if retry_after <= 0:
        raise ValueError("retry_after must be positive")
    block = now + retry_after
    if budget.server_block_until is not None:
        block = max(block, budget.server_block_until)
    return replace(budget, tokens=0.0, last_refill=now, server_block_until=block)


class PlatformLimiter:
    """Serialized owner of one platform's RateBudget.

    Connectors share one limiter per platform; transitions are
    linearizable behind the lock, and different platforms stay fully
    independent.
    """

    def __init__(self, budget: RateBudget, clock: Callable[[], float] = time.monotonic):
        self._budget = budget
        self._clock = clock
        self._lock = threading.Lock()

    def try_acquire(self) -> AcquireOutcome:
        with self._lock:
            outcome, self._budget = acquire(self._budget, self._clock())
            return outcome

    def observe_server_limit(self, retry_after: float) -> None:
        with self._lock:
            self._budget = observe_server_limit(self._budget, retry_after, self._clock())

    @property
    def budget(self) -> RateBudget:
        with self._lock:
            return self._budget


def default_limiter(
    platform: PlatformId, clock: Callable[[], float] = time.monotonic
) -> PlatformLimiter:
    capacity, window = DEFAULT_LIMITS[platform]
    return PlatformLimiter(
        RateBudget.full(platform, capacity, window, now=clock()), clock=clock
    )
