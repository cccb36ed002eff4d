"""Exhaustive enumeration by interval bisection.

A single search query can reach at most the first 1,000 of its matches, so
wide time windows are recursively halved until every window's match count
fits under that ceiling. Windows are half-open `[start, end)`, which makes
the two halves of a split a exact partition of the parent: nothing is
counted twice and nothing falls between.

A window that still exceeds the ceiling at the minimum granularity (one
second) cannot be subdivided further; its first 1,000 results are delivered
and the leaf is flagged truncated so completeness reporting stays honest.
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field, replace
from datetime import timedelta

from .forge import RESULT_CAP, SearchClient
from .models import SearchCriteria, TimeInterval

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PlannerConfig:
    """Planner limits; the defaults mirror the live endpoint."""

    result_cap: int = RESULT_CAP
    min_leaf_seconds: int = 1

    def __post_init__(self) -> None:
        if self.result_cap < 1:
            raise ValueError("result_cap must be positive")
        if self.min_leaf_seconds < 1:
            raise ValueError("leaves cannot be finer than one second")


@dataclass(frozen=True)
class LeafResult:
    """One fully resolved window and everything it yielded."""

    interval: TimeInterval
    total_count: int
    items: tuple[dict, ...]
    truncated: bool

    @property
    def complete(self) -> bool:
        return not self.truncated


@dataclass
class EnumerationReport:
    """Accounting for one enumeration pass."""

    leaves_processed: int = 0
    splits: int = 0
    items_delivered: int = 0
    truncated_leaves: list[TimeInterval] = field(default_factory=list)
    count_requests: int = 0
    page_requests: int = 0

    @property
    def exhaustive(self) -> bool:
        return not self.truncated_leaves


class IntervalPlanner:
    """Drives bisection over a :class:`SearchClient`."""

    def __init__(self, client: SearchClient, config: PlannerConfig | None = None) -> None:
        self._client = client
        self.config = config or PlannerConfig()

    def enumerate(self, criteria: SearchCriteria, on_leaf=None) -> EnumerationReport:
        """Resolve `criteria.interval` into leaves, oldest first.

        `on_leaf` receives each :class:`LeafResult` as soon as the leaf is
        resolved, in ascending interval order, so callers can persist and
        checkpoint incrementally. The report totals cover the whole pass.
        """
        report = EnumerationReport()
        cap = self.config.result_cap
        heap: list[TimeInterval] = [criteria.interval]
        pages_before = self._client.stats.page_requests
        while heap:
            interval = heapq.heappop(heap)
            sub = replace(criteria, interval=interval)
            total = self._client.count(sub)
            report.count_requests += 1
            if total > cap and interval.duration_seconds >= max(2, 2 * self.config.min_leaf_seconds):
                mid = interval.start + timedelta(seconds=interval.duration_seconds // 2)
                heapq.heappush(heap, TimeInterval(interval.start, mid))
                heapq.heappush(heap, TimeInterval(mid, interval.end))
                report.splits += 1
                continue
            truncated = total > cap
            if truncated:
                logger.warning(
                    "window %s holds %d matches at minimum granularity; "
                    "delivering the first %d and flagging the leaf",
                    interval,
                    total,
                    cap,
                )
            deliverable = min(total, cap)
            items = self._client.fetch_all(sub, expected=deliverable)[:deliverable] if total else []
            leaf = LeafResult(interval, total, tuple(items), truncated)
            report.leaves_processed += 1
            report.items_delivered += len(leaf.items)
            if truncated:
                report.truncated_leaves.append(interval)
            if on_leaf is not None:
                on_leaf(leaf)
        report.page_requests = self._client.stats.page_requests - pages_before
        return report
