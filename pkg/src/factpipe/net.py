"""Transport errors and the retry policy shared by the API client, the
scraper and the model gateway."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Callable, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")


class TransportError(Exception):
    """Network level failure (connection reset, DNS, unparseable body...)."""


class Timeout(TransportError):
    pass


class AuthError(Exception):
    """Invalid or missing credential. Never retried."""


class RateLimited(Exception):
    def __init__(self, message: str = "rate limited", retry_after_s: float | None = None):
        super().__init__(message)
        self.retry_after_s = retry_after_s


@dataclass(frozen=True)
class RetryPolicy:
    base_delay_s: float = 1.0
    factor: float = 2.0
    max_attempts: int = 5

    def delay_for(self, attempt: int) -> float:
        # attempt is 1-based; first retry waits base_delay_s
        return self.base_delay_s * self.factor ** (attempt - 1)


def call_with_backoff(
    fn: Callable[[], T],
    *,
    policy: RetryPolicy = RetryPolicy(),
    retry_on: tuple[type[Exception], ...] = (RateLimited, TransportError),
    sleep: Callable[[float], None] = time.sleep,
    what: str = "request",
) -> T:
    """Run fn, retrying on the given error types with exponential backoff.

    A RateLimited error carrying retry_after_s overrides the computed delay.
    The final attempt's error propagates unchanged.
    """
    attempt = 0
    while True:
        attempt += 1
        try:
            return fn()
        except retry_on as exc:
            if attempt >= policy.max_attempts:
                raise
            delay = policy.delay_for(attempt)
            if isinstance(exc, RateLimited) and exc.retry_after_s is not None:
                delay = exc.retry_after_s
            logger.warning("%s failed (attempt %d/%d): %s; retrying in %.1fs", what, attempt, policy.max_attempts, exc, delay)
            sleep(delay)
