"""Store contract: upsert merging, filtering parity, checkpoints, leases.

Every behavioral test runs against both implementations. The in-memory
store evaluates filters with `matches_filter` directly, so agreement
between the two is agreement between SQL translation and the reference
predicate.
"""

from __future__ import annotations

import threading
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from repoharvest.errors import CheckpointMonotonicityError, StoreError
from repoharvest.models import (
    Bounds,
    MiningCheckpoint,
    RepoFilter,
    RepositoryRecord,
    matches_filter,
)
from repoharvest.store import (
    MemoryRepositoryStore,
    MiningRunRecord,
    SqlRepositoryStore,
    merge_records,
    open_store,
)
from repoharvest.synthetic import PopulationParams, generate_population

UTC = timezone.utc
T0 = datetime(2024, 6, 1, tzinfo=UTC)


def make_record(**overrides):
    base = dict(
        name="apache/kafka",
        main_language="Java",
        created_at=datetime(2011, 8, 15, 18, 6, 16, tzinfo=UTC),
        pushed_at=datetime(2024, 1, 2, 3, 4, 5, tzinfo=UTC),
        updated_at=datetime(2024, 1, 2, 3, 4, 5, tzinfo=UTC),
        stars=100,
        forks=10,
        size=5000,
    )
    base.update(overrides)
    return RepositoryRecord(**base)


@pytest.fixture(params=["memory", "sqlite"])
def store(request, tmp_path):
    if request.param == "memory":
        s = MemoryRepositoryStore()
    else:
        s = SqlRepositoryStore(f"sqlite:///{tmp_path}/repo.db")
    yield s
    s.close()


class TestMergeRules:
    def test_absent_page_metric_keeps_stored_value(self):
        stored = make_record(commits=500, watchers=20)
        incoming = make_record(commits=None, watchers=None, stars=150)
        merged = merge_records(stored, incoming)
        assert merged.commits == 500
        assert merged.watchers == 20
        assert merged.stars == 150

    def test_present_page_metric_overwrites(self):
        stored = make_record(commits=500)
        merged = merge_records(stored, make_record(commits=760))
        assert merged.commits == 760

    def test_api_fields_overwrite_even_with_none(self):
        stored = make_record(license="MIT", homepage="https://a.example")
        merged = merge_records(stored, make_record(license=None, homepage=None))
        assert merged.license is None
        assert merged.homepage is None

    def test_zero_page_metric_is_a_real_value(self):
        stored = make_record(releases=5)
        merged = merge_records(stored, make_record(releases=0))
        assert merged.releases == 0


class TestUpsert:
    def test_insert_then_fetch(self, store):
        record = make_record(commits=3)
        store.upsert(record)
        assert store.get("apache/kafka") == record
        assert store.count() == 1

    def test_existing_name_never_creates_a_second_row(self, store):
        store.upsert(make_record(stars=100))
        store.upsert(make_record(stars=999))
        assert store.count() == 1
        assert store.get("apache/kafka").stars == 999

    def test_upsert_merges_per_field_rules(self, store):
        store.upsert(make_record(commits=500, stars=100, license="MIT"))
        store.upsert(make_record(commits=None, stars=120, license=None))
        row = store.get("apache/kafka")
        assert row.commits == 500
        assert row.stars == 120
        assert row.license is None

    def test_upsert_is_idempotent(self, store):
        record = make_record(commits=42, watchers=7, license="MIT")
        store.upsert(record)
        first = store.get(record.name)
        store.upsert(record)
        assert store.get(record.name) == first
        assert store.count() == 1

    def test_batch_with_internal_duplicates(self, store):
        a = make_record(commits=10)
        b = make_record(commits=None, stars=555)
        n = store.upsert_many([a, b])
        assert n == 1
        row = store.get("apache/kafka")
        assert row.commits == 10 and row.stars == 555

    def test_large_batch_round_trips(self, store):
        pop = generate_population(70, PopulationParams(size=1200))
        store.upsert_many(pop)
        assert store.count() == 1200
        sample = pop[617]
        assert store.get(sample.name) == sample

    def test_empty_batch_is_a_no_op(self, store):
        assert store.upsert_many([]) == 0
        assert store.count() == 0


class TestQueryAndFilterParity:
    @pytest.fixture()
    def population(self):
        return generate_population(71, PopulationParams(size=400, languages=("Java", "C++")))

    def filters(self):
        lo = datetime(2019, 6, 1, tzinfo=UTC)
        hi = datetime(2020, 6, 1, tzinfo=UTC)
        return [
            RepoFilter(),
            RepoFilter(language_equals="Java"),
            RepoFilter(name_contains="DATA"),
            RepoFilter(license_equals="MIT"),
            RepoFilter(stars=Bounds(10, 500)),
            RepoFilter(commits=Bounds(1000, None)),
            RepoFilter(contributors=Bounds(None, 50)),
            RepoFilter(issues=Bounds(10, 200)),
            RepoFilter(pulls=Bounds(0, 100)),
            RepoFilter(branches=Bounds(5, 30)),
            RepoFilter(releases=Bounds(1, None)),
            RepoFilter(watchers=Bounds(0, 10)),
            RepoFilter(forks=Bounds(2, 20)),
            RepoFilter(created_between=Bounds(lo, hi)),
            RepoFilter(last_commit_between=Bounds(lo, None)),
            RepoFilter(exclude_forks=True),
            RepoFilter(only_with_license=True),
            RepoFilter(only_with_open_issues=True),
            RepoFilter(exclude_archived=True),
            RepoFilter(
                language_equals="C++",
                stars=Bounds(10, None),
                exclude_forks=True,
                only_with_license=True,
                created_between=Bounds(lo, None),
            ),
        ]

    def test_counts_match_reference_predicate(self, store, population):
        store.upsert_many(population)
        for flt in self.filters():
            expected = sum(1 for r in population if matches_filter(r, flt))
            assert store.count(flt) == expected, flt

    def test_query_rows_match_reference_predicate(self, store, population):
        store.upsert_many(population)
        for flt in self.filters():
            expected = {r.name for r in population if matches_filter(r, flt)}
            got = {r.name for r in store.query(flt, limit=None)}
            assert got == expected, flt

    def test_sort_with_absent_last_both_directions(self, store):
        rows = [
            make_record(name="a/high", commits=900),
            make_record(name="a/low", commits=3),
            make_record(name="a/none1", commits=None),
            make_record(name="a/none2", commits=None),
        ]
        store.upsert_many(rows)
        descending = [r.name for r in store.query(sort="commits", order="desc")]
        ascending = [r.name for r in store.query(sort="commits", order="asc")]
        assert descending == ["a/high", "a/low", "a/none1", "a/none2"]
        assert ascending == ["a/low", "a/high", "a/none1", "a/none2"]

    def test_sort_ties_break_by_name(self, store):
        store.upsert_many(
            [make_record(name="b/x", stars=5), make_record(name="a/x", stars=5), make_record(name="c/x", stars=5)]
        )
        names = [r.name for r in store.query(sort="stars", order="desc")]
        assert names == ["a/x", "b/x", "c/x"]

    def test_sort_by_plural_column_names(self, store):
        store.upsert_many(
            [
                make_record(name="a/one", last_commit=datetime(2024, 1, 1, tzinfo=UTC)),
                make_record(name="a/two", last_commit=datetime(2023, 1, 1, tzinfo=UTC)),
            ]
        )
        names = [r.name for r in store.query(sort="last_commits", order="desc")]
        assert names == ["a/one", "a/two"]

    def test_pagination_windows_are_disjoint_and_ordered(self, store):
        pop = generate_population(72, PopulationParams(size=95))
        store.upsert_many(pop)
        pages = [store.query(sort="name", order="asc", limit=20, offset=i * 20) for i in range(5)]
        flattened = [r.name for page in pages for r in page]
        assert flattened == sorted(r.name for r in pop)

    def test_unknown_sort_rejected(self, store):
        with pytest.raises(StoreError):
            store.query(sort="popularity")
        with pytest.raises(StoreError):
            store.query(sort="stars", order="sideways")

    def test_name_contains_is_case_insensitive_substring(self, store):
        store.upsert_many([make_record(name="Apache/Kafka"), make_record(name="unrelated/thing")])
        assert [r.name for r in store.query(RepoFilter(name_contains="apache/"))] == ["Apache/Kafka"]

    def test_name_contains_escapes_like_wildcards(self, store):
        store.upsert_many([make_record(name="odd/percent%name"), make_record(name="odd/other-name")])
        assert store.count(RepoFilter(name_contains="percent%")) == 1
        assert store.count(RepoFilter(name_contains="%")) == 1

    def test_iter_filtered_streams_in_query_order(self, store):
        pop = generate_population(73, PopulationParams(size=60))
        store.upsert_many(pop)
        streamed = [r.name for r in store.iter_filtered(sort="stars", order="desc")]
        queried = [r.name for r in store.query(sort="stars", order="desc")]
        assert streamed == queried


class TestCheckpoints:
    def test_round_trip(self, store):
        cp = MiningCheckpoint("Java", T0, completed_initial_pass=False)
        store.save_checkpoint(cp)
        assert store.checkpoint("Java") == cp
        assert store.checkpoint("C++") is None

    def test_forward_movement_allowed(self, store):
        store.save_checkpoint(MiningCheckpoint("Java", T0))
        later = MiningCheckpoint("Java", T0 + timedelta(hours=6), completed_initial_pass=True)
        store.save_checkpoint(later)
        assert store.checkpoint("Java") == later

    def test_same_instant_resave_allowed(self, store):
        cp = MiningCheckpoint("Java", T0)
        store.save_checkpoint(cp)
        store.save_checkpoint(cp)
        assert store.checkpoint("Java") == cp

    def test_backward_movement_rejected(self, store):
        store.save_checkpoint(MiningCheckpoint("Java", T0))
        with pytest.raises(CheckpointMonotonicityError):
            store.save_checkpoint(MiningCheckpoint("Java", T0 - timedelta(seconds=1)))
        assert store.checkpoint("Java").last_mined_until == T0

    def test_completed_flag_cannot_regress(self, store):
        store.save_checkpoint(MiningCheckpoint("Java", T0, completed_initial_pass=True))
        with pytest.raises(CheckpointMonotonicityError):
            store.save_checkpoint(MiningCheckpoint("Java", T0 + timedelta(hours=1)))

    def test_languages_independent(self, store):
        store.save_checkpoint(MiningCheckpoint("Java", T0))
        store.save_checkpoint(MiningCheckpoint("C++", T0 + timedelta(days=1)))
        assert len(store.checkpoints()) == 2


class TestRunsAndStats:
    def test_runs_recorded_in_order(self, store):
        for hour in (0, 6):
            store.record_run(
                MiningRunRecord(
                    language="Java",
                    qualifier="created",
                    started_at=T0 + timedelta(hours=hour),
                    finished_at=T0 + timedelta(hours=hour, minutes=30),
                    leaves=4,
                    items_seen=100,
                    items_admitted=60,
                    items_persisted=60,
                )
            )
        runs = store.runs("Java")
        assert len(runs) == 2
        assert runs[0].started_at < runs[1].started_at
        assert store.runs("C++") == []

    def test_language_stats_combed_from_rows_and_runs(self, store):
        store.upsert_many([make_record(name="a/x"), make_record(name="a/y", main_language="C++")])
        store.record_run(
            MiningRunRecord(
                language="Java",
                qualifier="created",
                started_at=T0,
                finished_at=T0 + timedelta(minutes=10),
            )
        )
        stats = store.language_stats()
        assert stats["Java"]["records"] == 1
        assert stats["Java"]["last_pass"] == "2024-06-01T00:10:00Z"
        assert stats["C++"]["records"] == 1
        assert stats["C++"]["last_pass"] is None


class TestLeases:
    def test_acquire_then_conflict(self, store):
        assert store.acquire_lease("mining", "worker-1", 600, T0)
        assert not store.acquire_lease("mining", "worker-2", 600, T0 + timedelta(seconds=30))

    def test_expired_lease_is_free(self, store):
        assert store.acquire_lease("mining", "worker-1", 60, T0)
        assert store.acquire_lease("mining", "worker-2", 60, T0 + timedelta(seconds=61))

    def test_owner_reacquires_and_renews(self, store):
        assert store.acquire_lease("mining", "w", 60, T0)
        assert store.acquire_lease("mining", "w", 60, T0 + timedelta(seconds=10))
        assert store.renew_lease("mining", "w", 60, T0 + timedelta(seconds=20))

    def test_renew_fails_for_stranger_or_expired(self, store):
        assert not store.renew_lease("mining", "nobody", 60, T0)
        store.acquire_lease("mining", "w", 60, T0)
        assert not store.renew_lease("mining", "other", 60, T0 + timedelta(seconds=5))
        assert not store.renew_lease("mining", "w", 60, T0 + timedelta(seconds=120))

    def test_release_frees_for_others(self, store):
        store.acquire_lease("mining", "w", 600, T0)
        store.release_lease("mining", "w")
        assert store.acquire_lease("mining", "other", 600, T0 + timedelta(seconds=1))

    def test_release_by_stranger_keeps_lease(self, store):
        store.acquire_lease("mining", "w", 600, T0)
        store.release_lease("mining", "intruder")
        assert not store.acquire_lease("mining", "intruder", 600, T0 + timedelta(seconds=1))


class TestOpenStore:
    def test_memory_url(self):
        assert isinstance(open_store("memory://"), MemoryRepositoryStore)
        assert isinstance(open_store(None), MemoryRepositoryStore)

    def test_sqlite_url(self, tmp_path):
        s = open_store(f"sqlite:///{tmp_path}/x.db")
        assert isinstance(s, SqlRepositoryStore)
        s.upsert(make_record())
        s.close()
        again = open_store(f"sqlite:///{tmp_path}/x.db")
        assert again.count() == 1
        again.close()

    def test_concurrent_writers_do_not_lose_rows(self, tmp_path):
        s = open_store(f"sqlite:///{tmp_path}/c.db")
        pop = generate_population(74, PopulationParams(size=300))
        chunks = [pop[i::4] for i in range(4)]
        threads = [threading.Thread(target=s.upsert_many, args=(chunk,)) for chunk in chunks]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert s.count() == 300
        s.close()


class TestParityProperty:
    @given(
        seed=st.integers(0, 1000),
        stars_lo=st.one_of(st.none(), st.integers(0, 100)),
        issues_hi=st.one_of(st.none(), st.integers(0, 300)),
        exclude_forks=st.booleans(),
        only_licensed=st.booleans(),
    )
    @settings(max_examples=25, deadline=None)
    def test_sql_agrees_with_reference(self, seed, stars_lo, issues_hi, exclude_forks, only_licensed):
        pop = generate_population(seed, PopulationParams(size=120))
        sql = SqlRepositoryStore()
        memory = MemoryRepositoryStore()
        sql.upsert_many(pop)
        memory.upsert_many(pop)
        flt = RepoFilter(
            stars=Bounds(stars_lo, None) if stars_lo is not None else None,
            issues=Bounds(None, issues_hi) if issues_hi is not None else None,
            exclude_forks=exclude_forks,
            only_with_license=only_licensed,
        )
        assert sql.count(flt) == memory.count(flt)
        assert [r.name for r in sql.query(flt, sort="stars", order="desc")] == [
            r.name for r in memory.query(flt, sort="stars", order="desc")
        ]
        sql.close()
