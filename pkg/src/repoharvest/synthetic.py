"""Deterministic synthetic forge: seeded populations with known ground truth.

Everything the real forge hides, this one exposes: the full population is
generated up front from a seed, so tests can compare what the harvester
found against what exists. The backend honors the same limits as the real
endpoint (100 results per page, 10 pages per query) and the same query
grammar, including half-open time ranges.

Populations are reproducible: the same :class:`PopulationParams` and seed
always yield byte-identical repositories, and scripted failures are a pure
function of the seed and request ordinal.
"""

from __future__ import annotations

import bisect
import random
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import Any, Iterable

from .errors import (
    AuthenticationRejected,
    BackendUnavailable,
    PageCapError,
    PageFetchError,
    RateLimited,
)
from .forge import PAGE_INDEX_MAX, PAGE_SIZE_MAX, parse_query
from .models import (
    IntervalField,
    RepositoryRecord,
    SearchCriteria,
    format_instant,
    validate_record,
)

_LICENSES = ("MIT", "Apache-2.0", "GPL-3.0", "BSD-3-Clause", None, None)
_WORDS = (
    "async", "data", "web", "micro", "fast", "tiny", "cloud", "net", "dev",
    "lab", "kit", "flow", "graph", "cache", "queue", "task", "test", "mock",
)


@dataclass(frozen=True)
class PopulationParams:
    """Knobs for one generated population."""

    size: int = 1000
    window_start: datetime = datetime(2019, 1, 1, tzinfo=timezone.utc)
    window_end: datetime = datetime(2021, 1, 1, tzinfo=timezone.utc)
    languages: tuple[str, ...] = ("Java",)
    created_profile: str = "uniform"  # uniform | bursty | single_instant
    burst_count: int = 5
    cluster_instant: datetime | None = None
    starred_fraction: float = 0.5
    fork_fraction: float = 0.2
    archived_fraction: float = 0.05

    def __post_init__(self) -> None:
        if self.size < 0:
            raise ValueError("size must be nonnegative")
        if self.window_start >= self.window_end:
            raise ValueError("window must be nonempty")
        if self.created_profile not in ("uniform", "bursty", "single_instant"):
            raise ValueError(f"unknown profile {self.created_profile!r}")
        if not self.languages:
            raise ValueError("at least one language")
        if not 0.0 <= self.starred_fraction <= 1.0:
            raise ValueError("starred_fraction must be in [0, 1]")


def _created_instants(params: PopulationParams, rng: random.Random) -> list[datetime]:
    span = int((params.window_end - params.window_start).total_seconds())
    if params.created_profile == "single_instant":
        instant = params.cluster_instant or params.window_start
        return [instant] * params.size
    if params.created_profile == "bursty":
        centers = [rng.randrange(span) for _ in range(max(params.burst_count, 1))]
        offsets = []
        for _ in range(params.size):
            center = rng.choice(centers)
            jitter = int(rng.gauss(0, span * 0.002))
            offsets.append(min(max(center + jitter, 0), span - 1))
        return [params.window_start + timedelta(seconds=o) for o in offsets]
    return [params.window_start + timedelta(seconds=rng.randrange(span)) for _ in range(params.size)]


def _heavy_tailed_stars(rng: random.Random, starred_fraction: float) -> int:
    """Mostly tiny star counts with a long tail, zero below the threshold often."""
    if rng.random() >= starred_fraction:
        return rng.randrange(10)  # below the default admission threshold
    return 10 + int(rng.paretovariate(1.2))


def generate_population(seed: int, params: PopulationParams | None = None) -> list[RepositoryRecord]:
    """A reproducible population with full ground-truth metrics."""
    params = params or PopulationParams()
    rng = random.Random(seed)
    created = _created_instants(params, rng)
    repos: list[RepositoryRecord] = []
    for idx, created_at in enumerate(created):
        owner = f"{rng.choice(_WORDS)}{rng.randrange(100)}"
        name = f"{owner}/{rng.choice(_WORDS)}-{rng.choice(_WORDS)}-{idx}"
        language = rng.choice(params.languages)
        stars = _heavy_tailed_stars(rng, params.starred_fraction)
        total_issues = rng.randrange(0, 400)
        total_pulls = rng.randrange(0, 300)
        pushed_at = created_at + timedelta(seconds=rng.randrange(1, 10**7))
        raw: dict[str, Any] = {
            "name": name,
            "main_language": language,
            "created_at": created_at,
            "pushed_at": pushed_at,
            "updated_at": pushed_at,
            "default_branch": rng.choice(("main", "master", "trunk")),
            "stars": stars,
            "forks": rng.randrange(0, max(stars, 1) + 1),
            "size": rng.randrange(1, 500_000),
            "is_fork_project": rng.random() < params.fork_fraction,
            "has_wiki": rng.random() < 0.5,
            "archived": rng.random() < params.archived_fraction,
            "license": rng.choice(_LICENSES),
            "homepage": f"https://{owner}.example.org" if rng.random() < 0.3 else None,
            "commits": rng.randrange(1, 50_000),
            "last_commit_sha": "".join(rng.choices("0123456789abcdef", k=40)),
            "last_commit": pushed_at,
            "branches": rng.randrange(1, 60),
            "contributors": rng.randrange(1, 900),
            "releases": rng.randrange(0, 120),
            "watchers": rng.randrange(0, stars + 1),
            "total_issues": total_issues,
            "open_issues": rng.randrange(0, total_issues + 1),
            "total_pull_requests": total_pulls,
            "open_pull_requests": rng.randrange(0, total_pulls + 1),
        }
        repos.append(validate_record(raw))
    return repos


@dataclass(frozen=True)
class FailurePlan:
    """Deterministic fault injection by request ordinal.

    Each rate is the marginal probability that a given request fails that
    way; outcomes are fixed by (seed, ordinal) so replays see identical
    faults regardless of threading or retry order.
    """

    seed: int = 0
    transient_rate: float = 0.0
    rate_limit_rate: float = 0.0
    reject_token: str | None = None

    def outcome(self, ordinal: int) -> str | None:
        rng = random.Random(f"{self.seed}:{ordinal}")
        roll = rng.random()
        if roll < self.transient_rate:
            return "transient"
        if roll < self.transient_rate + self.rate_limit_rate:
            return "rate_limited"
        return None


class SyntheticForgeBackend:
    """In-process backend over a generated population.

    Results for a query are served ordered by (created_at, name), matching
    the determinism the interval planner relies on. Counting is O(log n)
    per query via sorted indexes built lazily per (field, language,
    min_stars bucket, fork inclusion).
    """

    def __init__(
        self,
        population: Iterable[RepositoryRecord],
        failure_plan: FailurePlan | None = None,
    ) -> None:
        self.population = sorted(population, key=lambda r: (r.created_at, r.name))
        self.failures = failure_plan or FailurePlan()
        self.request_log: list[dict[str, Any]] = []
        self._indexes: dict[tuple, tuple[list[datetime], list[RepositoryRecord]]] = {}

    # -- fault handling -------------------------------------------------

    def _admit(self, query: str, kind: str, token: str, page: int | None = None) -> None:
        ordinal = len(self.request_log)
        self.request_log.append(
            {"ordinal": ordinal, "kind": kind, "query": query, "token": token, "page": page}
        )
        if self.failures.reject_token is not None and token == self.failures.reject_token:
            raise AuthenticationRejected(token)
        outcome = self.failures.outcome(ordinal)
        if outcome == "transient":
            raise BackendUnavailable("synthetic outage")
        if outcome == "rate_limited":
            raise RateLimited(retry_after=60.0)

    # -- matching -------------------------------------------------------

    def _index(self, criteria: SearchCriteria) -> tuple[list[datetime], list[RepositoryRecord]]:
        key = (criteria.interval_field, criteria.language, criteria.min_stars, criteria.include_forks)
        cached = self._indexes.get(key)
        if cached is not None:
            return cached
        attr = "created_at" if criteria.interval_field is IntervalField.CREATED else "pushed_at"
        rows = [
            r
            for r in self.population
            if r.main_language == criteria.language
            and r.stars >= criteria.min_stars
            and (criteria.include_forks or not r.is_fork_project)
        ]
        rows.sort(key=lambda r: (getattr(r, attr), r.name))
        keys = [getattr(r, attr) for r in rows]
        self._indexes[key] = (keys, rows)
        return keys, rows

    def _matches(self, criteria: SearchCriteria) -> list[RepositoryRecord]:
        keys, rows = self._index(criteria)
        lo = bisect.bisect_left(keys, criteria.interval.start)
        hi = bisect.bisect_left(keys, criteria.interval.end)
        return rows[lo:hi]

    def match_count(self, criteria: SearchCriteria) -> int:
        """Ground-truth count, no request accounting; for test oracles."""
        keys, _ = self._index(criteria)
        lo = bisect.bisect_left(keys, criteria.interval.start)
        hi = bisect.bisect_left(keys, criteria.interval.end)
        return hi - lo

    # -- ForgeBackend interface ------------------------------------------

    def count(self, query: str, token: str) -> int:
        self._admit(query, "count", token)
        return self.match_count(parse_query(query))

    def page(self, query: str, page_index: int, per_page: int, token: str) -> list[dict[str, Any]]:
        if not 1 <= page_index <= PAGE_INDEX_MAX:
            raise PageCapError(f"page_index {page_index} outside 1..{PAGE_INDEX_MAX}")
        if not 1 <= per_page <= PAGE_SIZE_MAX:
            raise PageCapError(f"per_page {per_page} outside 1..{PAGE_SIZE_MAX}")
        self._admit(query, "page", token, page=page_index)
        rows = self._matches(parse_query(query))
        lo = (page_index - 1) * per_page
        return [api_item(r) for r in rows[lo : lo + per_page]]


# Fields the search endpoint reports; page metrics come from scraping.
API_FIELDS = (
    "name",
    "main_language",
    "created_at",
    "pushed_at",
    "updated_at",
    "default_branch",
    "stars",
    "forks",
    "size",
    "is_fork_project",
    "has_wiki",
    "archived",
    "license",
    "homepage",
)


def api_item(record: RepositoryRecord) -> dict[str, Any]:
    """The search-result shape: repository metadata without page metrics."""
    return {name: getattr(record, name) for name in API_FIELDS}


def _stat(record: RepositoryRecord, name: str, omit: frozenset[str]) -> int | None:
    if name in omit:
        return None
    return getattr(record, name)


def render_landing_primary(record: RepositoryRecord, omit: frozenset[str] = frozenset()) -> str:
    rows = []
    for metric, label in (("commits", "commits"), ("branches", "branches")):
        value = _stat(record, metric, omit)
        if value is not None:
            rows.append(
                f'<a class="stat" data-stat="{metric}" href="/{record.name}/{metric}">'
                f"<strong>{value:,}</strong> {label}</a>"
            )
    side = []
    for metric, label in (("releases", "Releases"), ("contributors", "contributors"), ("watchers", "watching")):
        value = _stat(record, metric, omit)
        if value is not None:
            side.append(f'<span class="stat" data-stat="{metric}"><strong>{value:,}</strong> {label}</span>')
    commit = ""
    if record.last_commit_sha and "last_commit_sha" not in omit:
        when = (
            f'<relative-time datetime="{format_instant(record.last_commit)}">recently</relative-time>'
            if record.last_commit and "last_commit" not in omit
            else ""
        )
        commit = (
            f'<div class="latest-commit">'
            f'<a class="commit-sha" data-full-sha="{record.last_commit_sha}" '
            f'href="/{record.name}/commit/{record.last_commit_sha}">{record.last_commit_sha[:7]}</a>'
            f"{when}</div>"
        )
    return (
        "<html><body>"
        f'<div id="repository-container-header"><strong>{record.name}</strong></div>'
        f'<main><div class="repo-stats">{"".join(rows)}</div>'
        f'<div class="sidebar">{"".join(side)}</div>{commit}</main>'
        "</body></html>"
    )


def render_landing_fallback(record: RepositoryRecord, omit: frozenset[str] = frozenset()) -> str:
    items = []
    for metric in ("commits", "branches", "contributors", "releases", "watchers"):
        value = _stat(record, metric, omit)
        if value is not None:
            items.append(f'<li class="{metric}"><span class="num">{value}</span> {metric}</li>')
    commit = ""
    if record.last_commit_sha and "last_commit_sha" not in omit:
        when = (
            f'<time-ago datetime="{format_instant(record.last_commit)}">a while ago</time-ago>'
            if record.last_commit and "last_commit" not in omit
            else ""
        )
        commit = (
            f'<div class="commit-tease" data-sha="{record.last_commit_sha}">'
            f'<span class="sha">{record.last_commit_sha[:10]}</span>{when}</div>'
        )
    return (
        "<html><body>"
        f'<div class="repo-title">{record.name}</div>'
        f'<ul class="numbers-summary">{"".join(items)}</ul>{commit}'
        "</body></html>"
    )


def _render_tally_primary(kind: str, total: int | None, open_count: int | None) -> str:
    open_part = f'<a class="{kind}-open">{open_count:,} Open</a>' if open_count is not None else ""
    closed = total - open_count if total is not None and open_count is not None else None
    closed_part = f'<a class="{kind}-closed">{closed:,} Closed</a>' if closed is not None else ""
    total_part = f'<span class="{kind}-total-count">{total:,} total</span>' if total is not None else ""
    return (
        "<html><body>"
        f'<div id="{kind}-toolbar">{open_part}{closed_part}</div>{total_part}'
        "</body></html>"
    )


def _render_tally_fallback(kind: str, total: int | None, open_count: int | None) -> str:
    open_part = f'<span class="open-count">{open_count} open</span>' if open_count is not None else ""
    total_part = f'<span class="total-count">{total} total</span>' if total is not None else ""
    return f'<html><body><div class="{kind}-header">{open_part}{total_part}</div></body></html>'


_BROKEN_PAGE = "<html><body><p>This page is temporarily unavailable.</p></body></html>"


class SyntheticPageSource:
    """Serves repository pages rendered from ground-truth records.

    Failure knobs:
      `primary_down`   names whose primary fetches all fail (fallback works)
      `broken_primary` names whose primary pages render unrecognizably
      `pages_down`     (name, page) pairs that fail in both layouts
      `omit`           name -> metrics left off that repository's pages
    """

    def __init__(
        self,
        records: Iterable[RepositoryRecord],
        *,
        primary_down: frozenset[str] = frozenset(),
        broken_primary: frozenset[str] = frozenset(),
        pages_down: frozenset[tuple[str, str]] = frozenset(),
        omit: dict[str, frozenset[str]] | None = None,
    ) -> None:
        self._records = {r.name: r for r in records}
        self.primary_down = primary_down
        self.broken_primary = broken_primary
        self.pages_down = pages_down
        self.omit = omit or {}
        self.fetch_log: list[tuple[str, str, str]] = []

    def fetch(self, repo_name: str, page: str, variant: str) -> str:
        self.fetch_log.append((repo_name, page, variant))
        record = self._records.get(repo_name)
        if record is None:
            raise PageFetchError(f"unknown repository {repo_name}")
        if (repo_name, page) in self.pages_down:
            raise PageFetchError(f"{page} page of {repo_name} is unreachable")
        if variant == "primary" and repo_name in self.primary_down:
            raise PageFetchError(f"primary fetch failed for {repo_name}")
        if variant == "primary" and repo_name in self.broken_primary:
            return _BROKEN_PAGE
        omit = self.omit.get(repo_name, frozenset())
        if page == "landing":
            render = render_landing_primary if variant == "primary" else render_landing_fallback
            return render(record, omit)
        if page == "issues":
            total = _stat(record, "total_issues", omit)
            open_count = _stat(record, "open_issues", omit)
            tally = _render_tally_primary if variant == "primary" else _render_tally_fallback
            return tally("issues", total, open_count)
        if page == "pulls":
            total = _stat(record, "total_pull_requests", omit)
            open_count = _stat(record, "open_pull_requests", omit)
            tally = _render_tally_primary if variant == "primary" else _render_tally_fallback
            return tally("pulls", total, open_count)
        raise PageFetchError(f"unknown page {page!r}")
