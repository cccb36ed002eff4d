"""Token-aware request budgeting over a sliding window.

The forge allows each credential a fixed number of search requests inside
any rolling window (30 per 60 seconds by default). The governor owns a pool
of credentials and hands out one :class:`Permit` per request, choosing the
least recently used credential that still has headroom and blocking callers
in strict FIFO order when none does. Disabled credentials (failed
authentication) leave the rotation permanently; penalized ones sit out
until a deadline passes.
"""

from __future__ import annotations

import itertools
import threading
from collections import deque
from dataclasses import dataclass
from datetime import datetime, timedelta

from .clock import Clock, SystemClock
from .errors import GovernorShutdown, RateBudgetExceeded


@dataclass(frozen=True)
class Permit:
    """Permission to issue one request with `token`, granted at `granted_at`."""

    token: str
    granted_at: datetime


class RateBudget:
    """Sliding-window counter for one credential.

    A grant at time T occupies a slot until T + window; a grant is allowed
    whenever fewer than `limit` slots are occupied. This makes any `limit+1`
    consecutive grants span at least the window, which is the property the
    forge enforces server-side.
    """

    def __init__(self, limit: int = 30, window_seconds: float = 60.0) -> None:
        if limit < 1:
            raise ValueError("limit must be at least 1")
        if window_seconds <= 0:
            raise ValueError("window must be positive")
        self.limit = limit
        self.window_seconds = window_seconds
        self._grants: deque[datetime] = deque()

    def _prune(self, now: datetime) -> None:
        horizon = now - timedelta(seconds=self.window_seconds)
        while self._grants and self._grants[0] <= horizon:
            self._grants.popleft()

    def has_room(self, now: datetime) -> bool:
        self._prune(now)
        return len(self._grants) < self.limit

    def seconds_until_room(self, now: datetime) -> float:
        """0.0 when a grant is allowed now, else the wait until one will be."""
        self._prune(now)
        if len(self._grants) < self.limit:
            return 0.0
        oldest = self._grants[0]
        return (oldest - now).total_seconds() + self.window_seconds

    def note(self, now: datetime) -> None:
        self._prune(now)
        if len(self._grants) >= self.limit:
            raise RateBudgetExceeded(f"window already holds {self.limit} grants")
        self._grants.append(now)

    @property
    def in_window(self) -> int:
        return len(self._grants)


class _TokenState:
    __slots__ = ("token", "budget", "disabled", "penalized_until", "last_granted_seq", "order")

    def __init__(self, token: str, budget: RateBudget, order: int) -> None:
        self.token = token
        self.budget = budget
        self.disabled = False
        self.penalized_until: datetime | None = None
        # Sequence number of the last grant; grants can share a timestamp, so
        # recency must be tracked by order of issue, not by clock reading.
        self.last_granted_seq = -1
        self.order = order


class RateGovernor:
    """FIFO permit dispenser over a rotating credential pool.

    Thread-safe. `acquire` blocks (on the injected clock) until the caller
    is at the head of the queue and some credential has window headroom.
    """

    def __init__(
        self,
        tokens: list[str] | tuple[str, ...],
        clock: Clock | None = None,
        *,
        limit: int = 30,
        window_seconds: float = 60.0,
    ) -> None:
        if not tokens:
            raise ValueError("at least one credential is required")
        if len(set(tokens)) != len(tokens):
            raise ValueError("credentials must be unique")
        self._clock = clock or SystemClock()
        self._cond = threading.Condition()
        self._states = {
            tok: _TokenState(tok, RateBudget(limit, window_seconds), i) for i, tok in enumerate(tokens)
        }
        self._queue: deque[int] = deque()
        self._tickets = itertools.count()
        self._closed = False
        self._grants: list[Permit] = []

    @property
    def grants(self) -> tuple[Permit, ...]:
        """Every permit ever issued, in grant order."""
        with self._cond:
            return tuple(self._grants)

    @property
    def waiting(self) -> int:
        """Callers currently queued inside :meth:`acquire`."""
        with self._cond:
            return len(self._queue)

    def tokens_enabled(self) -> tuple[str, ...]:
        with self._cond:
            return tuple(s.token for s in self._states.values() if not s.disabled)

    def disable(self, token: str) -> None:
        """Remove a credential from rotation permanently (bad authentication)."""
        with self._cond:
            state = self._states.get(token)
            if state is not None:
                state.disabled = True
            self._cond.notify_all()

    def penalize(self, token: str, until: datetime) -> None:
        """Bench a credential until `until` (server told us to back off)."""
        with self._cond:
            state = self._states.get(token)
            if state is not None:
                current = state.penalized_until
                if current is None or until > current:
                    state.penalized_until = until
            self._cond.notify_all()

    def shutdown(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    def _pick(self, now: datetime) -> _TokenState | None:
        ready = [
            s
            for s in self._states.values()
            if not s.disabled
            and (s.penalized_until is None or s.penalized_until <= now)
            and s.budget.has_room(now)
        ]
        if not ready:
            return None
        # Least recently used first; never-used credentials lead in pool order.
        return min(ready, key=lambda s: (s.last_granted_seq, s.order))

    def _seconds_until_candidate(self, now: datetime) -> float:
        waits = []
        for s in self._states.values():
            if s.disabled:
                continue
            wait = s.budget.seconds_until_room(now)
            if s.penalized_until is not None and s.penalized_until > now:
                wait = max(wait, (s.penalized_until - now).total_seconds())
            waits.append(wait)
        return min(waits)

    def acquire(self, timeout: float | None = None) -> Permit:
        """Block until a permit is granted; FIFO across callers.

        Raises :class:`GovernorShutdown` once :meth:`shutdown` is called or
        every credential is disabled, and :class:`RateBudgetExceeded` when
        `timeout` (measured on the governor's clock) expires first.
        """
        with self._cond:
            ticket = next(self._tickets)
            self._queue.append(ticket)
            deadline = self._clock.now() + timedelta(seconds=timeout) if timeout is not None else None
            try:
                while True:
                    if self._closed:
                        raise GovernorShutdown("governor is shut down")
                    if all(s.disabled for s in self._states.values()):
                        raise GovernorShutdown("every credential is disabled")
                    now = self._clock.now()
                    at_head = self._queue[0] == ticket
                    if at_head:
                        state = self._pick(now)
                        if state is not None:
                            state.budget.note(now)
                            state.last_granted_seq = len(self._grants)
                            permit = Permit(state.token, now)
                            self._grants.append(permit)
                            return permit
                    if deadline is not None and now >= deadline:
                        raise RateBudgetExceeded("timed out waiting for a request slot")
                    if at_head:
                        wait = self._seconds_until_candidate(now)
                        if deadline is not None:
                            wait = min(wait, (deadline - now).total_seconds())
                        # A zero wait cannot happen while no candidate exists;
                        # guard anyway so a simulated clock always progresses.
                        self._clock.wait_on(self._cond, max(wait, 0.001))
                    else:
                        head_wait = None
                        if deadline is not None:
                            head_wait = (deadline - now).total_seconds()
                        self._clock.wait_on(self._cond, head_wait)
            finally:
                self._queue.remove(ticket)
                self._cond.notify_all()
