"""Search API access: query grammar, paging limits, and the retrying client.

The forge search endpoint takes one `q` string of `+`-joined qualifiers:

    fork:true+is:public+language:Java+created:2020-03-01..2020-04-01+stars:>=10

Range qualifiers are half-open: `created:A..B` selects creation instants in
[A, B). Instants falling on a UTC midnight render date-only; anything finer
renders as a full `YYYY-MM-DDTHH:MM:SSZ` instant. The endpoint never serves
more than 100 results per page or 10 pages per query, so a single query can
reach at most the first 1,000 results no matter how many match.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime, time as dtime, timedelta, timezone
from typing import Any, Protocol, runtime_checkable

from .clock import Clock, SystemClock
from .errors import (
    AuthenticationRejected,
    BackendUnavailable,
    PageCapError,
    QueryGrammarError,
    RateLimited,
)
from .models import IntervalField, SearchCriteria, TimeInterval, format_instant, utc_second
from .ratelimit import RateGovernor

PAGE_SIZE_MAX = 100
PAGE_INDEX_MAX = 10
RESULT_CAP = PAGE_SIZE_MAX * PAGE_INDEX_MAX

_STARS_RE = re.compile(r"^>=(\d+)$")
_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")
_INSTANT_RE = re.compile(r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z$")


def _render_instant(dt: datetime) -> str:
    dt = utc_second(dt)
    if dt.timetz() == dtime(0, 0, tzinfo=timezone.utc):
        return dt.date().isoformat()
    return format_instant(dt)


def _parse_range_instant(text: str) -> datetime:
    if _DATE_RE.match(text):
        year, month, day = map(int, text.split("-"))
        return datetime(year, month, day, tzinfo=timezone.utc)
    if _INSTANT_RE.match(text):
        return utc_second(datetime.fromisoformat(text[:-1] + "+00:00"))
    raise QueryGrammarError(f"malformed instant {text!r}")


def build_query(criteria: SearchCriteria) -> str:
    """Render criteria as the forge's `q` string."""
    parts = []
    if criteria.include_forks:
        parts.append("fork:true")
    if criteria.public_only:
        parts.append("is:public")
    parts.append(f"language:{criteria.language}")
    start = _render_instant(criteria.interval.start)
    end = _render_instant(criteria.interval.end)
    parts.append(f"{criteria.interval_field.value}:{start}..{end}")
    if criteria.min_stars > 0:
        parts.append(f"stars:>={criteria.min_stars}")
    return "+".join(parts)


def _split_qualifiers(query: str) -> list[str]:
    # '+' is both the qualifier separator and a legal language character
    # (C++). A fragment without ':' belongs to the qualifier before it.
    parts: list[str] = []
    for fragment in query.split("+"):
        if ":" in fragment or not parts:
            parts.append(fragment)
        else:
            parts[-1] += "+" + fragment
    return parts


def parse_query(query: str) -> SearchCriteria:
    """Inverse of :func:`build_query`; rejects anything outside the grammar."""
    if not query:
        raise QueryGrammarError("empty query")
    language: str | None = None
    interval: TimeInterval | None = None
    interval_field: IntervalField | None = None
    min_stars = 0
    include_forks = False
    public_only = False
    for part in _split_qualifiers(query):
        if ":" not in part:
            raise QueryGrammarError(f"bare term {part!r}")
        key, _, value = part.partition(":")
        if key == "fork":
            if value not in ("true", "false"):
                raise QueryGrammarError(f"fork takes true or false, got {value!r}")
            include_forks = value == "true"
        elif key == "is":
            if value != "public":
                raise QueryGrammarError(f"unsupported visibility {value!r}")
            public_only = True
        elif key == "language":
            if not value:
                raise QueryGrammarError("empty language")
            if language is not None:
                raise QueryGrammarError("language given twice")
            language = value
        elif key in ("created", "pushed"):
            if interval is not None:
                raise QueryGrammarError("more than one time-range qualifier")
            lo, sep, hi = value.partition("..")
            if not sep:
                raise QueryGrammarError(f"range must use '..': {value!r}")
            start, end = _parse_range_instant(lo), _parse_range_instant(hi)
            if start >= end:
                raise QueryGrammarError(f"empty range {value!r}")
            interval = TimeInterval(start, end)
            interval_field = IntervalField(key)
        elif key == "stars":
            m = _STARS_RE.match(value)
            if not m:
                raise QueryGrammarError(f"stars takes >=N, got {value!r}")
            min_stars = int(m.group(1))
        else:
            raise QueryGrammarError(f"unknown qualifier {key!r}")
    if language is None:
        raise QueryGrammarError("language qualifier is required")
    if interval is None or interval_field is None:
        raise QueryGrammarError("a created: or pushed: range is required")
    return SearchCriteria(
        language=language,
        interval=interval,
        interval_field=interval_field,
        min_stars=min_stars,
        include_forks=include_forks,
        public_only=public_only,
    )


@runtime_checkable
class ForgeBackend(Protocol):
    """Raw transport to the search endpoint; no rate limiting, no retries."""

    def count(self, query: str, token: str) -> int:
        """Total number of matches for `query`."""

    def page(self, query: str, page_index: int, per_page: int, token: str) -> list[dict[str, Any]]:
        """One page of results; `page_index` is 1-based."""


@dataclass
class ClientStats:
    count_requests: int = 0
    page_requests: int = 0
    retries: int = 0
    rate_limited: int = 0
    tokens_disabled: int = 0


class SearchClient:
    """Backend access with permits, bounded retries, and the page cap.

    Every attempt (including each retry) consumes one permit from the
    governor, so retries cannot sneak past the request budget. Transient
    backend failures retry with exponential backoff; a rate-limit response
    benches the offending credential and retries on another; a rejected
    credential leaves the pool permanently.
    """

    MAX_TRANSIENT_ATTEMPTS = 3
    BACKOFF_BASE_SECONDS = 2.0
    MAX_RATE_LIMIT_RETRIES = 10

    def __init__(self, backend: ForgeBackend, governor: RateGovernor, clock: Clock | None = None) -> None:
        self._backend = backend
        self._governor = governor
        self._clock = clock or SystemClock()
        self.stats = ClientStats()

    def count(self, criteria: SearchCriteria) -> int:
        query = build_query(criteria)
        self.stats.count_requests += 1
        return self._call(lambda token: self._backend.count(query, token))

    def page(self, criteria: SearchCriteria, page_index: int, per_page: int = PAGE_SIZE_MAX) -> list[dict[str, Any]]:
        if not 1 <= page_index <= PAGE_INDEX_MAX:
            raise PageCapError(f"page_index must be in 1..{PAGE_INDEX_MAX}, got {page_index}")
        if not 1 <= per_page <= PAGE_SIZE_MAX:
            raise PageCapError(f"per_page must be in 1..{PAGE_SIZE_MAX}, got {per_page}")
        query = build_query(criteria)
        self.stats.page_requests += 1
        return self._call(lambda token: self._backend.page(query, page_index, per_page, token))

    def fetch_all(self, criteria: SearchCriteria, expected: int | None = None) -> list[dict[str, Any]]:
        """All reachable results, up to the 1,000-result ceiling."""
        items: list[dict[str, Any]] = []
        for index in range(1, PAGE_INDEX_MAX + 1):
            batch = self.page(criteria, index)
            items.extend(batch)
            if len(batch) < PAGE_SIZE_MAX:
                break
            if expected is not None and len(items) >= min(expected, RESULT_CAP):
                break
        return items

    def _call(self, do):
        transient_left = self.MAX_TRANSIENT_ATTEMPTS
        rate_left = self.MAX_RATE_LIMIT_RETRIES
        backoff = self.BACKOFF_BASE_SECONDS
        while True:
            permit = self._governor.acquire()
            try:
                return do(permit.token)
            except RateLimited as exc:
                self.stats.rate_limited += 1
                rate_left -= 1
                if rate_left < 0:
                    raise
                until = self._clock.now() + timedelta(seconds=exc.retry_after)
                self._governor.penalize(permit.token, until)
            except AuthenticationRejected:
                self.stats.tokens_disabled += 1
                self._governor.disable(permit.token)
                # the next acquire() raises GovernorShutdown once no
                # credential remains, so this loop terminates
            except BackendUnavailable:
                transient_left -= 1
                if transient_left <= 0:
                    raise
                self.stats.retries += 1
                self._clock.sleep(backoff)
                backoff *= 2
