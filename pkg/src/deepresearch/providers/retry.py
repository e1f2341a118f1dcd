from __future__ import annotations

import logging
import threading
import time
from typing import Callable, TypeVar

from ..errors import ProviderError

log = logging.getLogger(__name__)

T = TypeVar("T")


def call_with_retry(
    fn: Callable[[], T],
    *,
    retries: int = 3,
    base_delay: float = 0.5,
    max_delay: float = 8.0,
    sleep: Callable[[float], None] = time.sleep,
) -> T:
    """Run ``fn``, retrying only errors whose class is marked ``retryable``."""
    attempt = 0
    while True:
        try:
            return fn()
        except ProviderError as exc:
            if not exc.retryable or attempt >= retries:
                raise
            delay = min(max_delay, base_delay * (2**attempt))
            log.warning("retryable provider error (%s); retry %d in %.1fs", exc, attempt + 1, delay)
            sleep(delay)
            attempt += 1


class RateLimiter:
    """Token bucket plus a concurrency cap.

    Use as a context manager around each request.
    """

    def __init__(
        self,
        per_minute: float = 60,
        max_concurrent: int = 5,
        *,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self.capacity = float(per_minute)
        self.rate = per_minute / 60.0
        self._tokens = self.capacity
        self._stamp = clock()
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._slots = threading.BoundedSemaphore(max_concurrent)

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(self.capacity, self._tokens + (now - self._stamp) * self.rate)
                self._stamp = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            self._sleep(wait)

    def __enter__(self) -> "RateLimiter":
        self._slots.acquire()
        try:
            self.acquire()
        except BaseException:
            self._slots.release()
            raise
        return self

    def __exit__(self, *exc) -> None:
        self._slots.release()
