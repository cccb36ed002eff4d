"""Injectable time sources.

Everything time-dependent (rate windows, the six-hour scheduler, freshness
buffers) takes a clock instead of reading the system time, so the whole
pipeline can run on a simulated clock in tests.
"""

from __future__ import annotations

import threading
import time
from datetime import datetime, timedelta, timezone
from typing import Protocol, runtime_checkable

# Real-clock waiters poll at this cadence when a simulated clock cannot tell
# them how long to sleep for.
_POLL_SECONDS = 0.02


def utc_second(dt: datetime) -> datetime:
    """Normalize to a timezone-aware UTC instant at whole-second precision."""
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).replace(microsecond=0)


@runtime_checkable
class Clock(Protocol):
    def now(self) -> datetime:
        """Current instant, timezone-aware UTC."""

    def sleep(self, seconds: float) -> None:
        """Pause the caller for `seconds` of this clock's time."""

    def wait_on(self, cond: threading.Condition, seconds: float | None) -> None:
        """Wait on `cond` (held by the caller) until notified or `seconds` elapse.

        `seconds` is None when the caller has no deadline and only wants
        notifications.
        """


class SystemClock:
    """Wall-clock time."""

    def now(self) -> datetime:
        return datetime.now(timezone.utc).replace(microsecond=0)

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            time.sleep(seconds)

    def wait_on(self, cond: threading.Condition, seconds: float | None) -> None:
        cond.wait(timeout=seconds)


class SimulatedClock:
    """Manually driven clock for deterministic tests.

    With ``auto_advance`` (the default), ``sleep`` jumps time forward and
    returns immediately, so single-threaded code that would block in
    production runs instantly. With ``auto_advance=False``, ``sleep`` blocks
    until another thread calls :meth:`advance` past the wake-up point, which
    lets tests hold a waiter suspended and release it explicitly.
    """

    def __init__(self, start: datetime, *, auto_advance: bool = True) -> None:
        self._now = utc_second(start)
        self.auto_advance = auto_advance
        self._cond = threading.Condition()
        self.slept_total = 0.0

    def now(self) -> datetime:
        with self._cond:
            return self._now

    def advance(self, seconds: float) -> None:
        if seconds < 0:
            raise ValueError("cannot move a clock backwards")
        with self._cond:
            self._now += timedelta(seconds=seconds)
            self._cond.notify_all()

    def sleep(self, seconds: float) -> None:
        if seconds <= 0:
            return
        self.slept_total += seconds
        if self.auto_advance:
            self.advance(seconds)
            return
        with self._cond:
            target = self._now + timedelta(seconds=seconds)
            while self._now < target:
                self._cond.wait(timeout=_POLL_SECONDS)

    def wait_on(self, cond: threading.Condition, seconds: float | None) -> None:
        # Simulated deadlines never map to real seconds: jump when allowed,
        # otherwise poll so advance() from another thread is noticed promptly.
        if seconds is not None and self.auto_advance:
            self.sleep(seconds)
            return
        cond.wait(timeout=_POLL_SECONDS)
