"""The mining pipeline: enumerate search windows, scrape pages, persist.

One `Miner` owns the full path for a language: the interval planner
resolves the window into capped leaves, every delivered item is validated
and checked against the star threshold, admitted repositories get their
three metric pages scraped, and the fused records land in the store in
one batch per leaf. The checkpoint advances only after a leaf is fully
persisted, so a crash at any point re-mines at most one leaf and the
upsert semantics make the replay invisible.

`Scheduler` wraps a miner in a lease-guarded loop that starts a fresh
pass on a fixed cadence. The first pass per language walks the creation
axis from the mining epoch; once that pass completes, later passes walk
the push axis so only repositories with new activity are refreshed.
"""

from __future__ import annotations

import dataclasses
import logging
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timedelta

from .clock import Clock, SystemClock, utc_second
from .errors import RecordValidationError
from .extractor import PageExtractor
from .forge import SearchClient
from .models import (
    MINING_EPOCH,
    IntervalField,
    MiningCheckpoint,
    RepositoryRecord,
    SearchCriteria,
    TimeInterval,
    validate_record,
)
from .planner import IntervalPlanner, LeafResult, PlannerConfig
from .store import MiningRunRecord, RepositoryStore

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MinerConfig:
    """Knobs for one mining pass."""

    languages: tuple[str, ...] = ("Java",)
    min_stars: int = 10
    include_forks: bool = True
    workers: int = 8
    # Items this close to now may still be settling in the search index,
    # so every window stops short of the current instant.
    freshness_buffer: timedelta = timedelta(hours=2)
    planner: PlannerConfig = field(default_factory=PlannerConfig)

    def __post_init__(self) -> None:
        if not self.languages:
            raise ValueError("at least one language is required")
        if self.workers < 1:
            raise ValueError("workers must be positive")
        if self.freshness_buffer < timedelta(0):
            raise ValueError("freshness buffer cannot be negative")


@dataclass
class _LeafTally:
    """Mutable per-pass accounting shared by the leaf callback."""

    seen: int = 0
    admitted: int = 0
    persisted: int = 0
    page_failures: int = 0
    rejected: int = 0


class Miner:
    """Runs complete mining passes against one store."""

    def __init__(
        self,
        client: SearchClient,
        extractor: PageExtractor | None,
        store: RepositoryStore,
        config: MinerConfig | None = None,
        clock: Clock | None = None,
    ) -> None:
        """Without an extractor the pass is API-only: rows persist with
        search metadata and no page metrics."""
        self._client = client
        self._extractor = extractor
        self._store = store
        self.config = config or MinerConfig()
        self._clock = clock or SystemClock()
        self._planner = IntervalPlanner(client, self.config.planner)

    def _window(self, language: str) -> tuple[TimeInterval | None, IntervalField, bool]:
        """The next unmined window and the axis it lives on.

        Returns ``(None, axis, completed)`` when the store is already
        caught up to the freshness horizon.
        """
        checkpoint = self._store.checkpoint(language)
        horizon = utc_second(self._clock.now() - self.config.freshness_buffer)
        if checkpoint is None:
            start, completed = MINING_EPOCH, False
        else:
            start, completed = checkpoint.last_mined_until, checkpoint.completed_initial_pass
        axis = IntervalField.PUSHED if completed else IntervalField.CREATED
        if horizon <= start:
            return None, axis, completed
        return TimeInterval(start, horizon), axis, completed

    def _admit(self, items: tuple[dict, ...], tally: _LeafTally) -> list[RepositoryRecord]:
        admitted = []
        for item in items:
            try:
                record = validate_record(item)
            except RecordValidationError as err:
                tally.rejected += 1
                logger.warning("rejected search item: %s", err)
                continue
            if record.stars < self.config.min_stars:
                continue
            admitted.append(record)
        return admitted

    def _scrape(self, record: RepositoryRecord, crawled_at: datetime) -> tuple[RepositoryRecord, int]:
        """Fuse page metrics into the record; contradictory pages count as failed."""
        outcome = self._extractor.harvest(record.name)
        failures = len(outcome.failures)
        fused = dataclasses.replace(record, last_crawled_at=crawled_at, **outcome.metrics)
        try:
            validate_record(dataclasses.asdict(fused))
        except RecordValidationError as err:
            logger.warning("page metrics for %s rejected: %s", record.name, err)
            return dataclasses.replace(record, last_crawled_at=crawled_at), failures + 1
        return fused, failures

    def _scrape_all(self, records: list[RepositoryRecord]) -> tuple[list[RepositoryRecord], int]:
        crawled_at = utc_second(self._clock.now())
        if not records:
            return [], 0
        if self._extractor is None:
            return [dataclasses.replace(r, last_crawled_at=crawled_at) for r in records], 0
        if self.config.workers == 1 or len(records) == 1:
            results = [self._scrape(record, crawled_at) for record in records]
        else:
            width = min(self.config.workers, len(records))
            with ThreadPoolExecutor(max_workers=width) as pool:
                results = list(pool.map(lambda r: self._scrape(r, crawled_at), records))
        fused = [record for record, _ in results]
        failures = sum(count for _, count in results)
        return fused, failures

    def mine_language(self, language: str) -> MiningRunRecord | None:
        """One full pass over the unmined window; None when already caught up."""
        window, axis, completed_before = self._window(language)
        if window is None:
            return None
        criteria = SearchCriteria(
            language=language,
            interval=window,
            interval_field=axis,
            min_stars=self.config.min_stars,
            include_forks=self.config.include_forks,
        )
        started_at = utc_second(self._clock.now())
        tally = _LeafTally()

        def on_leaf(leaf: LeafResult) -> None:
            tally.seen += len(leaf.items)
            admitted = self._admit(leaf.items, tally)
            tally.admitted += len(admitted)
            fused, failures = self._scrape_all(admitted)
            tally.page_failures += failures
            tally.persisted += self._store.upsert_many(fused)
            completes_pass = completed_before or leaf.interval.end == window.end
            self._store.save_checkpoint(
                MiningCheckpoint(language, leaf.interval.end, completed_initial_pass=completes_pass)
            )

        report = self._planner.enumerate(criteria, on_leaf)
        run = MiningRunRecord(
            language=language,
            qualifier=axis.value,
            started_at=started_at,
            finished_at=utc_second(self._clock.now()),
            leaves=report.leaves_processed,
            items_seen=tally.seen,
            items_admitted=tally.admitted,
            items_persisted=tally.persisted,
            truncated_leaves=len(report.truncated_leaves),
            page_failures=tally.page_failures,
        )
        self._store.record_run(run)
        if report.truncated_leaves:
            logger.warning(
                "%s: %d leaves hit the result cap at minimum granularity",
                language,
                len(report.truncated_leaves),
            )
        return run

    def mine_all(self) -> list[MiningRunRecord]:
        """One pass per configured language, skipping caught-up ones."""
        runs = []
        for language in self.config.languages:
            run = self.mine_language(language)
            if run is not None:
                runs.append(run)
        return runs


@dataclass(frozen=True)
class SchedulerConfig:
    """Cadence and coordination settings for the mining loop."""

    cycle_interval: timedelta = timedelta(hours=6)
    lease_name: str = "mining"
    lease_ttl: timedelta = timedelta(minutes=15)
    lease_retry: timedelta = timedelta(minutes=1)
    owner: str = ""

    def __post_init__(self) -> None:
        if self.cycle_interval <= timedelta(0):
            raise ValueError("cycle interval must be positive")
        if not self.owner:
            object.__setattr__(self, "owner", f"miner-{uuid.uuid4().hex[:8]}")


class Scheduler:
    """Lease-guarded loop that starts a mining cycle on a fixed cadence.

    Multiple scheduler processes may point at the same store; the lease
    guarantees at most one of them is mining at a time, and an instance
    that dies mid-cycle frees the lease after its TTL.
    """

    def __init__(
        self,
        miner: Miner,
        store: RepositoryStore,
        config: SchedulerConfig | None = None,
        clock: Clock | None = None,
    ) -> None:
        self._miner = miner
        self._store = store
        self.config = config or SchedulerConfig()
        self._clock = clock or SystemClock()
        self._stop = threading.Event()
        self.cycles_completed = 0
        self.history: list[MiningRunRecord] = []

    def stop(self) -> None:
        self._stop.set()

    def _try_cycle(self) -> bool:
        cfg = self.config
        ttl = cfg.lease_ttl.total_seconds()
        if not self._store.acquire_lease(cfg.lease_name, cfg.owner, ttl, self._clock.now()):
            return False
        try:
            for language in self._miner.config.languages:
                run = self._miner.mine_language(language)
                if run is not None:
                    self.history.append(run)
                if not self._store.renew_lease(cfg.lease_name, cfg.owner, ttl, self._clock.now()):
                    logger.warning("lost the mining lease mid-cycle; stopping this pass")
                    return True
            return True
        finally:
            self._store.release_lease(cfg.lease_name, cfg.owner)

    def run(self, until: datetime | None = None, max_cycles: int | None = None) -> int:
        """Mine on the configured cadence; returns completed cycle count.

        Stops when the clock reaches `until`, after `max_cycles` cycles,
        or when :meth:`stop` is called, whichever comes first.
        """
        while not self._stop.is_set():
            if until is not None and self._clock.now() >= until:
                break
            if max_cycles is not None and self.cycles_completed >= max_cycles:
                break
            cycle_start = self._clock.now()
            if self._try_cycle():
                self.cycles_completed += 1
                wake = cycle_start + self.config.cycle_interval
            else:
                wake = cycle_start + self.config.lease_retry
            pause = (wake - self._clock.now()).total_seconds()
            if pause > 0:
                self._clock.sleep(pause)
        return self.cycles_completed
