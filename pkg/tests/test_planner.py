"""Bisection enumeration against ground-truth populations.

The oracle throughout: a brute-force scan of the generated population.
Enumeration is exhaustive exactly when the delivered name multiset equals
the scan's, with no duplicates.
"""

from __future__ import annotations

from collections import Counter
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from repoharvest.clock import SimulatedClock
from repoharvest.forge import SearchClient
from repoharvest.models import IntervalField, SearchCriteria, TimeInterval
from repoharvest.planner import EnumerationReport, IntervalPlanner, LeafResult, PlannerConfig
from repoharvest.ratelimit import RateGovernor
from repoharvest.synthetic import PopulationParams, SyntheticForgeBackend, generate_population

UTC = timezone.utc
W0 = datetime(2019, 1, 1, tzinfo=UTC)
W1 = datetime(2021, 1, 1, tzinfo=UTC)
T0 = datetime(2024, 6, 1, tzinfo=UTC)


def expected_names(population, criteria):
    field = "created_at" if criteria.interval_field is IntervalField.CREATED else "pushed_at"
    return Counter(
        r.name
        for r in population
        if r.main_language == criteria.language
        and r.stars >= criteria.min_stars
        and (criteria.include_forks or not r.is_fork_project)
        and criteria.interval.start <= getattr(r, field) < criteria.interval.end
    )


def make_planner(population, cap=1000, min_leaf=1, rate_limit=10**6):
    backend = SyntheticForgeBackend(population)
    clock = SimulatedClock(T0)
    governor = RateGovernor(["t1", "t2"], clock, limit=rate_limit, window_seconds=60)
    client = SearchClient(backend, governor, clock)
    planner = IntervalPlanner(client, PlannerConfig(result_cap=cap, min_leaf_seconds=min_leaf))
    return planner, backend, client


def run(planner, criteria):
    leaves: list[LeafResult] = []
    report = planner.enumerate(criteria, on_leaf=leaves.append)
    return leaves, report


def criteria_over(start=W0, end=W1, language="Java", **kw):
    return SearchCriteria(language=language, interval=TimeInterval(start, end), min_stars=kw.pop("min_stars", 0), **kw)


class TestExhaustiveness:
    @pytest.mark.parametrize("profile", ["uniform", "bursty"])
    def test_delivers_exactly_the_matching_multiset(self, profile):
        pop = generate_population(42, PopulationParams(size=3000, created_profile=profile))
        planner, _, _ = make_planner(pop, cap=200)
        crit = criteria_over()
        leaves, report = run(planner, crit)
        delivered = Counter(i["name"] for leaf in leaves for i in leaf.items)
        assert delivered == expected_names(pop, crit)
        assert report.exhaustive
        assert report.items_delivered == sum(delivered.values())

    def test_star_and_fork_qualifiers_flow_through(self):
        pop = generate_population(43, PopulationParams(size=1200, starred_fraction=0.5))
        planner, _, _ = make_planner(pop, cap=150)
        crit = criteria_over(min_stars=10, include_forks=False)
        leaves, report = run(planner, crit)
        delivered = Counter(i["name"] for leaf in leaves for i in leaf.items)
        assert delivered == expected_names(pop, crit)
        assert all(i["stars"] >= 10 for leaf in leaves for i in leaf.items)

    def test_empty_window_is_one_empty_leaf(self):
        pop = generate_population(44, PopulationParams(size=100))
        planner, _, _ = make_planner(pop)
        crit = criteria_over(start=W1 + timedelta(days=30), end=W1 + timedelta(days=60))
        leaves, report = run(planner, crit)
        assert report.leaves_processed == 1
        assert report.splits == 0
        assert report.items_delivered == 0
        assert leaves[0].items == () and leaves[0].total_count == 0

    def test_no_split_when_under_cap(self):
        pop = generate_population(45, PopulationParams(size=500))
        planner, _, _ = make_planner(pop, cap=1000)
        leaves, report = run(planner, criteria_over())
        assert report.splits == 0
        assert report.leaves_processed == 1
        assert len(leaves[0].items) == leaves[0].total_count

    def test_leaves_arrive_oldest_first_and_partition(self):
        pop = generate_population(46, PopulationParams(size=2500))
        planner, _, _ = make_planner(pop, cap=100)
        crit = criteria_over()
        leaves, _ = run(planner, crit)
        starts = [leaf.interval.start for leaf in leaves]
        assert starts == sorted(starts)
        # adjacent leaves tile the original window exactly
        assert leaves[0].interval.start == crit.interval.start
        assert leaves[-1].interval.end == crit.interval.end
        for left, right in zip(leaves, leaves[1:]):
            assert left.interval.end == right.interval.start

    def test_count_request_accounting(self):
        pop = generate_population(47, PopulationParams(size=900))
        planner, _, client = make_planner(pop, cap=120)
        _, report = run(planner, criteria_over())
        # every split spends one count; every leaf spends one count
        assert report.count_requests == report.splits + report.leaves_processed
        assert report.count_requests == client.stats.count_requests
        assert report.count_requests <= 2 * report.leaves_processed - 1
        assert report.page_requests == client.stats.page_requests


class TestTruncation:
    def test_same_instant_overflow_truncates_one_leaf(self):
        instant = datetime(2020, 5, 5, 12, 0, 0, tzinfo=UTC)
        pop = generate_population(
            48,
            PopulationParams(size=1500, created_profile="single_instant", cluster_instant=instant),
        )
        planner, _, _ = make_planner(pop, cap=1000)
        leaves, report = run(planner, criteria_over())
        assert not report.exhaustive
        assert len(report.truncated_leaves) == 1
        truncated = report.truncated_leaves[0]
        assert truncated.duration_seconds == 1
        assert truncated.contains(instant)
        flagged = [leaf for leaf in leaves if leaf.truncated]
        assert len(flagged) == 1
        assert len(flagged[0].items) == 1000
        assert flagged[0].total_count == 1500
        # everything outside the hot second still arrives in full
        assert report.items_delivered == 1000

    def test_truncation_logs_a_warning(self, caplog):
        instant = datetime(2020, 5, 5, tzinfo=UTC)
        pop = generate_population(
            49, PopulationParams(size=30, created_profile="single_instant", cluster_instant=instant)
        )
        planner, _, _ = make_planner(pop, cap=10)
        with caplog.at_level("WARNING", logger="repoharvest.planner"):
            _, report = run(planner, criteria_over())
        assert not report.exhaustive
        assert any("minimum granularity" in m for m in caplog.messages)

    def test_min_leaf_seconds_respected(self):
        instant = datetime(2020, 5, 5, tzinfo=UTC)
        pop = generate_population(
            50, PopulationParams(size=40, created_profile="single_instant", cluster_instant=instant)
        )
        planner, _, _ = make_planner(pop, cap=10, min_leaf=60)
        leaves, _ = run(planner, criteria_over())
        assert all(leaf.interval.duration_seconds >= 60 for leaf in leaves)

    def test_hot_second_plus_background_still_complete_elsewhere(self):
        instant = datetime(2020, 2, 2, 2, 2, 2, tzinfo=UTC)
        hot = generate_population(
            51, PopulationParams(size=300, created_profile="single_instant", cluster_instant=instant)
        )
        background = generate_population(52, PopulationParams(size=400))
        pop = hot + background
        planner, _, _ = make_planner(pop, cap=100)
        crit = criteria_over()
        leaves, report = run(planner, crit)
        delivered = Counter(i["name"] for leaf in leaves for i in leaf.items)
        missing = expected_names(pop, crit) - delivered
        # only repos from the overflowing second may be missing
        assert len(report.truncated_leaves) == 1
        hot_names = {r.name for r in hot}
        assert set(missing) <= hot_names
        assert sum(missing.values()) == 300 - 100


class TestPropertyExhaustive:
    @given(seed=st.integers(0, 10**6), cap=st.sampled_from([17, 50, 130]), size=st.integers(0, 400))
    @settings(max_examples=25, deadline=None)
    def test_random_populations_enumerate_completely(self, seed, cap, size):
        pop = generate_population(seed, PopulationParams(size=size))
        planner, _, _ = make_planner(pop, cap=cap)
        crit = criteria_over()
        leaves, report = run(planner, crit)
        delivered = Counter(i["name"] for leaf in leaves for i in leaf.items)
        assert delivered == expected_names(pop, crit)
        assert max(delivered.values(), default=1) == 1
        assert report.exhaustive
