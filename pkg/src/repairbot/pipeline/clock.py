"""Injectable clocks so that timelines can be replayed deterministically."""

from __future__ import annotations

import threading
import time
from datetime import datetime, timedelta, timezone
from typing import Protocol


class Clock(Protocol):
    def now(self) -> datetime: ...

    def sleep(self, seconds: float) -> None: ...

    def fork(self) -> "Clock":
        """A clock for one unit of work, starting at the current time."""
        ...


class SystemClock:
    def now(self) -> datetime:
        return datetime.now(timezone.utc)

    def sleep(self, seconds: float) -> None:
        time.sleep(seconds)

    def fork(self) -> "SystemClock":
        return self


class FakeClock:
    """Simulated time: every ``now()`` advances by ``tick`` seconds.

    ``sleep`` advances instantly. Forks start at the parent's current time
    and then tick on their own, so concurrent workers stamp deterministic
    times regardless of how threads interleave.
    """

    def __init__(self, start: datetime, tick: float = 1.0):
        if start.tzinfo is None:
            start = start.replace(tzinfo=timezone.utc)
        self._now = start
        self.tick = timedelta(seconds=tick)
        self._lock = threading.Lock()

    def now(self) -> datetime:
        with self._lock:
            current = self._now
            self._now += self.tick
            return current

    def peek(self) -> datetime:
        return self._now

    def advance(self, seconds: float) -> None:
        with self._lock:
            self._now += timedelta(seconds=seconds)

    def sleep(self, seconds: float) -> None:
        self.advance(seconds)

    def fork(self) -> "FakeClock":
        with self._lock:
            return FakeClock(self._now, self.tick.total_seconds())
