"""Repository persistence with merge-on-write semantics.

One row per repository, keyed by name. Writing an already-known name never
creates a second row; it merges. Merge rules differ by where a field comes
from: search-API fields (stars, forks, timestamps, license, ...) always
take the incoming value, while page-scraped metrics keep the stored value
whenever the incoming one is absent, because an absent page metric means
"the scrape did not see it", not "it became nothing".

Instants are stored as `YYYY-MM-DDTHH:MM:SSZ` text, which sorts
lexicographically in chronological order. Two implementations share the
same contract: a SQL store (embedded SQLite or a server URL) and a plain
in-memory store used as the behavioral reference in tests.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, fields, replace
from datetime import datetime, timedelta
from typing import Any, Iterable, Iterator, Protocol, runtime_checkable

import sqlalchemy as sa
from sqlalchemy.pool import StaticPool

from .errors import CheckpointMonotonicityError, StoreError
from .models import (
    FILTER_RANGE_FIELDS,
    PAGE_SOURCED_FIELDS,
    TABLE_COLUMNS,
    COLUMN_TO_FIELD,
    MiningCheckpoint,
    RepoFilter,
    RepositoryRecord,
    format_instant,
    matches_filter,
    utc_second,
)

_INSTANT_FIELDS = frozenset({"created_at", "pushed_at", "updated_at", "last_commit", "last_crawled_at"})
_RECORD_FIELDS = tuple(f.name for f in fields(RepositoryRecord))
_IN_CHUNK = 500

SORTABLE_COLUMNS = TABLE_COLUMNS


@dataclass(frozen=True)
class MiningRunRecord:
    """Accounting for one completed mining pass over one language."""

    language: str
    qualifier: str
    started_at: datetime
    finished_at: datetime
    leaves: int = 0
    items_seen: int = 0
    items_admitted: int = 0
    items_persisted: int = 0
    truncated_leaves: int = 0
    page_failures: int = 0


def merge_records(stored: RepositoryRecord, incoming: RepositoryRecord) -> RepositoryRecord:
    """Merge `incoming` onto `stored` under the per-source overwrite rules."""
    changes: dict[str, Any] = {}
    for name in _RECORD_FIELDS:
        if name == "name":
            continue
        new = getattr(incoming, name)
        if name in PAGE_SOURCED_FIELDS and new is None:
            continue  # absent scrape never erases a measured value
        changes[name] = new
    return replace(stored, **changes)


@runtime_checkable
class RepositoryStore(Protocol):
    """What the pipeline, query service, and CLI need from persistence."""

    def upsert(self, record: RepositoryRecord) -> None: ...

    def upsert_many(self, records: Iterable[RepositoryRecord]) -> int: ...

    def get(self, name: str) -> RepositoryRecord | None: ...

    def count(self, flt: RepoFilter | None = None) -> int: ...

    def query(
        self,
        flt: RepoFilter | None = None,
        *,
        sort: str = "stars",
        order: str = "desc",
        limit: int | None = None,
        offset: int = 0,
    ) -> list[RepositoryRecord]: ...

    def iter_filtered(
        self, flt: RepoFilter | None = None, *, sort: str = "stars", order: str = "desc"
    ) -> Iterator[RepositoryRecord]: ...

    def checkpoint(self, language: str) -> MiningCheckpoint | None: ...

    def checkpoints(self) -> list[MiningCheckpoint]: ...

    def save_checkpoint(self, checkpoint: MiningCheckpoint) -> None: ...

    def record_run(self, run: MiningRunRecord) -> None: ...

    def runs(self, language: str | None = None) -> list[MiningRunRecord]: ...

    def language_stats(self) -> dict[str, dict[str, Any]]: ...

    def acquire_lease(self, name: str, owner: str, ttl_seconds: float, now: datetime) -> bool: ...

    def renew_lease(self, name: str, owner: str, ttl_seconds: float, now: datetime) -> bool: ...

    def release_lease(self, name: str, owner: str) -> None: ...

    def close(self) -> None: ...


def _validate_sort(sort: str, order: str) -> tuple[str, str]:
    if sort not in SORTABLE_COLUMNS:
        raise StoreError(f"cannot sort by {sort!r}")
    if order not in ("asc", "desc"):
        raise StoreError(f"order must be asc or desc, got {order!r}")
    return COLUMN_TO_FIELD[sort], order


def _merge_batch(records: Iterable[RepositoryRecord]) -> dict[str, RepositoryRecord]:
    """Collapse duplicates inside one batch, later entries merging onto earlier."""
    merged: dict[str, RepositoryRecord] = {}
    for record in records:
        held = merged.get(record.name)
        merged[record.name] = record if held is None else merge_records(held, record)
    return merged


class MemoryRepositoryStore:
    """Reference implementation over plain dicts; thread-safe."""

    def __init__(self) -> None:
        self._lock = threading.RLock()
        self._rows: dict[str, RepositoryRecord] = {}
        self._checkpoints: dict[str, MiningCheckpoint] = {}
        self._runs: list[MiningRunRecord] = []
        self._leases: dict[str, tuple[str, datetime]] = {}

    def upsert(self, record: RepositoryRecord) -> None:
        self.upsert_many([record])

    def upsert_many(self, records: Iterable[RepositoryRecord]) -> int:
        batch = _merge_batch(records)
        with self._lock:
            for name, record in batch.items():
                held = self._rows.get(name)
                self._rows[name] = record if held is None else merge_records(held, record)
        return len(batch)

    def get(self, name: str) -> RepositoryRecord | None:
        with self._lock:
            return self._rows.get(name)

    def count(self, flt: RepoFilter | None = None) -> int:
        with self._lock:
            if flt is None:
                return len(self._rows)
            return sum(1 for r in self._rows.values() if matches_filter(r, flt))

    def _sorted(self, flt: RepoFilter | None, sort: str, order: str) -> list[RepositoryRecord]:
        field_name, order = _validate_sort(sort, order)
        with self._lock:
            rows = [r for r in self._rows.values() if flt is None or matches_filter(r, flt)]
        present = [r for r in rows if getattr(r, field_name) is not None]
        absent = [r for r in rows if getattr(r, field_name) is None]
        present.sort(key=lambda r: r.name)
        present.sort(key=lambda r: getattr(r, field_name), reverse=order == "desc")
        absent.sort(key=lambda r: r.name)
        return present + absent

    def query(self, flt=None, *, sort="stars", order="desc", limit=None, offset=0):
        rows = self._sorted(flt, sort, order)
        if offset:
            rows = rows[offset:]
        if limit is not None:
            rows = rows[:limit]
        return rows

    def iter_filtered(self, flt=None, *, sort="stars", order="desc"):
        yield from self._sorted(flt, sort, order)

    def checkpoint(self, language: str) -> MiningCheckpoint | None:
        with self._lock:
            return self._checkpoints.get(language)

    def checkpoints(self) -> list[MiningCheckpoint]:
        with self._lock:
            return sorted(self._checkpoints.values(), key=lambda c: c.language)

    def save_checkpoint(self, checkpoint: MiningCheckpoint) -> None:
        with self._lock:
            held = self._checkpoints.get(checkpoint.language)
            _guard_checkpoint(held, checkpoint)
            self._checkpoints[checkpoint.language] = checkpoint

    def record_run(self, run: MiningRunRecord) -> None:
        with self._lock:
            self._runs.append(run)

    def runs(self, language: str | None = None) -> list[MiningRunRecord]:
        with self._lock:
            return [r for r in self._runs if language is None or r.language == language]

    def language_stats(self) -> dict[str, dict[str, Any]]:
        with self._lock:
            stats: dict[str, dict[str, Any]] = {}
            for record in self._rows.values():
                entry = stats.setdefault(record.main_language, {"records": 0, "last_pass": None})
                entry["records"] += 1
            for run in self._runs:
                entry = stats.setdefault(run.language, {"records": 0, "last_pass": None})
                finished = format_instant(run.finished_at)
                if entry["last_pass"] is None or finished > entry["last_pass"]:
                    entry["last_pass"] = finished
            return stats

    def acquire_lease(self, name: str, owner: str, ttl_seconds: float, now: datetime) -> bool:
        with self._lock:
            held = self._leases.get(name)
            if held is not None and held[0] != owner and held[1] > now:
                return False
            self._leases[name] = (owner, now + timedelta(seconds=ttl_seconds))
            return True

    def renew_lease(self, name: str, owner: str, ttl_seconds: float, now: datetime) -> bool:
        with self._lock:
            held = self._leases.get(name)
            if held is None or held[0] != owner or held[1] <= now:
                return False
            self._leases[name] = (owner, now + timedelta(seconds=ttl_seconds))
            return True

    def release_lease(self, name: str, owner: str) -> None:
        with self._lock:
            held = self._leases.get(name)
            if held is not None and held[0] == owner:
                del self._leases[name]

    def close(self) -> None:
        pass


def _guard_checkpoint(held: MiningCheckpoint | None, incoming: MiningCheckpoint) -> None:
    if held is None:
        return
    if incoming.last_mined_until < held.last_mined_until:
        raise CheckpointMonotonicityError(
            f"checkpoint for {incoming.language} would move back from "
            f"{format_instant(held.last_mined_until)} to {format_instant(incoming.last_mined_until)}"
        )
    if held.completed_initial_pass and not incoming.completed_initial_pass:
        raise CheckpointMonotonicityError(
            f"checkpoint for {incoming.language} would unmark the completed initial pass"
        )


def _to_row(record: RepositoryRecord) -> dict[str, Any]:
    row: dict[str, Any] = {}
    for name in _RECORD_FIELDS:
        value = getattr(record, name)
        if name in _INSTANT_FIELDS and value is not None:
            value = format_instant(value)
        row[name] = value
    return row


def _parse_stored_instant(text: str) -> datetime:
    return utc_second(datetime.fromisoformat(text[:-1] + "+00:00"))


def _from_row(mapping: Any) -> RepositoryRecord:
    kwargs: dict[str, Any] = {}
    for name in _RECORD_FIELDS:
        value = mapping[name]
        if name in _INSTANT_FIELDS and value is not None:
            value = _parse_stored_instant(value)
        if isinstance(value, int) and name in ("is_fork_project", "has_wiki", "archived"):
            value = bool(value)
        kwargs[name] = value
    return RepositoryRecord(**kwargs)


def _like_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace("%", "\\%").replace("_", "\\_")


class SqlRepositoryStore:
    """SQL-backed store; pass an embedded `sqlite:///...` or a server URL."""

    def __init__(self, url: str = "sqlite://") -> None:
        kwargs: dict[str, Any] = {"future": True}
        if url.startswith("sqlite"):
            # one shared connection keeps an in-memory database visible to
            # every thread; file-backed databases get the same treatment so
            # writer serialization happens in-process instead of via locks
            kwargs["connect_args"] = {"check_same_thread": False}
            kwargs["poolclass"] = StaticPool
        self._engine = sa.create_engine(url, **kwargs)
        self._meta = sa.MetaData()
        self._repos = sa.Table(
            "repositories",
            self._meta,
            sa.Column("name", sa.Text, primary_key=True),
            sa.Column("commits", sa.BigInteger),
            sa.Column("last_commit_sha", sa.Text),
            sa.Column("last_commit", sa.Text),
            sa.Column("license", sa.Text),
            sa.Column("branches", sa.BigInteger),
            sa.Column("default_branch", sa.Text, nullable=False),
            sa.Column("contributors", sa.BigInteger),
            sa.Column("releases", sa.BigInteger),
            sa.Column("watchers", sa.BigInteger),
            sa.Column("stars", sa.BigInteger, nullable=False),
            sa.Column("forks", sa.BigInteger, nullable=False),
            sa.Column("is_fork_project", sa.Boolean, nullable=False),
            sa.Column("size", sa.BigInteger, nullable=False),
            sa.Column("created_at", sa.Text, nullable=False, index=True),
            sa.Column("pushed_at", sa.Text, nullable=False),
            sa.Column("updated_at", sa.Text, nullable=False),
            sa.Column("homepage", sa.Text),
            sa.Column("main_language", sa.Text, nullable=False, index=True),
            sa.Column("total_issues", sa.BigInteger),
            sa.Column("open_issues", sa.BigInteger),
            sa.Column("total_pull_requests", sa.BigInteger),
            sa.Column("open_pull_requests", sa.BigInteger),
            sa.Column("has_wiki", sa.Boolean, nullable=False),
            sa.Column("archived", sa.Boolean, nullable=False),
            sa.Column("last_crawled_at", sa.Text),
        )
        self._checkpoints = sa.Table(
            "mining_checkpoints",
            self._meta,
            sa.Column("language", sa.Text, primary_key=True),
            sa.Column("last_mined_until", sa.Text, nullable=False),
            sa.Column("completed_initial_pass", sa.Boolean, nullable=False),
        )
        self._runs = sa.Table(
            "mining_runs",
            self._meta,
            sa.Column("id", sa.Integer, primary_key=True, autoincrement=True),
            sa.Column("language", sa.Text, nullable=False, index=True),
            sa.Column("qualifier", sa.Text, nullable=False),
            sa.Column("started_at", sa.Text, nullable=False),
            sa.Column("finished_at", sa.Text, nullable=False),
            sa.Column("leaves", sa.Integer, nullable=False),
            sa.Column("items_seen", sa.Integer, nullable=False),
            sa.Column("items_admitted", sa.Integer, nullable=False),
            sa.Column("items_persisted", sa.Integer, nullable=False),
            sa.Column("truncated_leaves", sa.Integer, nullable=False),
            sa.Column("page_failures", sa.Integer, nullable=False),
        )
        self._leases = sa.Table(
            "leases",
            self._meta,
            sa.Column("name", sa.Text, primary_key=True),
            sa.Column("owner", sa.Text, nullable=False),
            sa.Column("expires_at", sa.Text, nullable=False),
        )
        self._meta.create_all(self._engine)

    # -- repositories ----------------------------------------------------

    def upsert(self, record: RepositoryRecord) -> None:
        self.upsert_many([record])

    def upsert_many(self, records: Iterable[RepositoryRecord]) -> int:
        batch = _merge_batch(records)
        if not batch:
            return 0
        names = list(batch)
        with self._engine.begin() as conn:
            held: dict[str, RepositoryRecord] = {}
            for i in range(0, len(names), _IN_CHUNK):
                chunk = names[i : i + _IN_CHUNK]
                result = conn.execute(sa.select(self._repos).where(self._repos.c.name.in_(chunk)))
                for row in result.mappings():
                    record = _from_row(row)
                    held[record.name] = record
            inserts: list[dict[str, Any]] = []
            updates: list[dict[str, Any]] = []
            for name, record in batch.items():
                stored = held.get(name)
                if stored is None:
                    inserts.append(_to_row(record))
                else:
                    merged = merge_records(stored, record)
                    if merged != stored:
                        row = _to_row(merged)
                        row["match_name"] = row.pop("name")
                        updates.append(row)
            if inserts:
                conn.execute(sa.insert(self._repos), inserts)
            if updates:
                stmt = (
                    self._repos.update()
                    .where(self._repos.c.name == sa.bindparam("match_name"))
                    .values({c: sa.bindparam(c) for c in _RECORD_FIELDS if c != "name"})
                )
                conn.execute(stmt, updates)
        return len(batch)

    def get(self, name: str) -> RepositoryRecord | None:
        with self._engine.connect() as conn:
            row = conn.execute(
                sa.select(self._repos).where(self._repos.c.name == name)
            ).mappings().first()
        return None if row is None else _from_row(row)

    def _conditions(self, flt: RepoFilter | None):
        if flt is None:
            return []
        c = self._repos.c
        conds = []
        if flt.name_contains is not None:
            conds.append(c.name.ilike(f"%{_like_escape(flt.name_contains)}%", escape="\\"))
        if flt.license_equals is not None:
            conds.append(c.license == flt.license_equals)
        if flt.language_equals is not None:
            conds.append(c.main_language == flt.language_equals)
        for filter_name, field_name in FILTER_RANGE_FIELDS.items():
            bounds = getattr(flt, filter_name)
            if bounds is None:
                continue
            col = c[field_name]
            if bounds.lo is not None:
                conds.append(col >= bounds.lo)
            if bounds.hi is not None:
                conds.append(col <= bounds.hi)
            if bounds.lo is None and bounds.hi is None:
                conds.append(col.is_not(None))
        for attr, col in (("created_between", c.created_at), ("last_commit_between", c.last_commit)):
            bounds = getattr(flt, attr)
            if bounds is None:
                continue
            if bounds.lo is not None:
                conds.append(col >= format_instant(bounds.lo))
            if bounds.hi is not None:
                conds.append(col <= format_instant(bounds.hi))
            if bounds.lo is None and bounds.hi is None:
                conds.append(col.is_not(None))
        if flt.exclude_forks:
            conds.append(c.is_fork_project.is_(False))
        if flt.only_with_license:
            conds.append(c.license.is_not(None))
        if flt.only_with_open_issues:
            conds.append(c.open_issues > 0)
        if flt.exclude_archived:
            conds.append(c.archived.is_(False))
        return conds

    def _order_by(self, sort: str, order: str):
        field_name, order = _validate_sort(sort, order)
        col = self._repos.c[field_name]
        absent_last = sa.case((col.is_(None), 1), else_=0)
        direction = col.desc() if order == "desc" else col.asc()
        return [absent_last, direction, self._repos.c.name.asc()]

    def count(self, flt: RepoFilter | None = None) -> int:
        stmt = sa.select(sa.func.count()).select_from(self._repos).where(*self._conditions(flt))
        with self._engine.connect() as conn:
            return conn.execute(stmt).scalar_one()

    def query(self, flt=None, *, sort="stars", order="desc", limit=None, offset=0):
        stmt = (
            sa.select(self._repos)
            .where(*self._conditions(flt))
            .order_by(*self._order_by(sort, order))
            .offset(offset)
        )
        if limit is not None:
            stmt = stmt.limit(limit)
        with self._engine.connect() as conn:
            return [_from_row(row) for row in conn.execute(stmt).mappings()]

    def iter_filtered(self, flt=None, *, sort="stars", order="desc"):
        stmt = (
            sa.select(self._repos)
            .where(*self._conditions(flt))
            .order_by(*self._order_by(sort, order))
        )
        with self._engine.connect() as conn:
            for row in conn.execute(stmt).mappings():
                yield _from_row(row)

    # -- checkpoints -------------------------------------------------------

    def checkpoint(self, language: str) -> MiningCheckpoint | None:
        with self._engine.connect() as conn:
            row = conn.execute(
                sa.select(self._checkpoints).where(self._checkpoints.c.language == language)
            ).mappings().first()
        if row is None:
            return None
        return MiningCheckpoint(
            language=row["language"],
            last_mined_until=_parse_stored_instant(row["last_mined_until"]),
            completed_initial_pass=bool(row["completed_initial_pass"]),
        )

    def checkpoints(self) -> list[MiningCheckpoint]:
        with self._engine.connect() as conn:
            rows = conn.execute(
                sa.select(self._checkpoints).order_by(self._checkpoints.c.language)
            ).mappings().all()
        return [
            MiningCheckpoint(
                language=row["language"],
                last_mined_until=_parse_stored_instant(row["last_mined_until"]),
                completed_initial_pass=bool(row["completed_initial_pass"]),
            )
            for row in rows
        ]

    def save_checkpoint(self, checkpoint: MiningCheckpoint) -> None:
        with self._engine.begin() as conn:
            row = conn.execute(
                sa.select(self._checkpoints).where(self._checkpoints.c.language == checkpoint.language)
            ).mappings().first()
            held = None
            if row is not None:
                held = MiningCheckpoint(
                    language=row["language"],
                    last_mined_until=_parse_stored_instant(row["last_mined_until"]),
                    completed_initial_pass=bool(row["completed_initial_pass"]),
                )
            _guard_checkpoint(held, checkpoint)
            values = {
                "last_mined_until": format_instant(checkpoint.last_mined_until),
                "completed_initial_pass": checkpoint.completed_initial_pass,
            }
            if held is None:
                conn.execute(sa.insert(self._checkpoints).values(language=checkpoint.language, **values))
            else:
                conn.execute(
                    self._checkpoints.update()
                    .where(self._checkpoints.c.language == checkpoint.language)
                    .values(**values)
                )

    # -- mining runs -------------------------------------------------------

    def record_run(self, run: MiningRunRecord) -> None:
        values = {
            "language": run.language,
            "qualifier": run.qualifier,
            "started_at": format_instant(run.started_at),
            "finished_at": format_instant(run.finished_at),
            "leaves": run.leaves,
            "items_seen": run.items_seen,
            "items_admitted": run.items_admitted,
            "items_persisted": run.items_persisted,
            "truncated_leaves": run.truncated_leaves,
            "page_failures": run.page_failures,
        }
        with self._engine.begin() as conn:
            conn.execute(sa.insert(self._runs).values(**values))

    def runs(self, language: str | None = None) -> list[MiningRunRecord]:
        stmt = sa.select(self._runs).order_by(self._runs.c.id)
        if language is not None:
            stmt = stmt.where(self._runs.c.language == language)
        with self._engine.connect() as conn:
            rows = conn.execute(stmt).mappings().all()
        return [
            MiningRunRecord(
                language=row["language"],
                qualifier=row["qualifier"],
                started_at=_parse_stored_instant(row["started_at"]),
                finished_at=_parse_stored_instant(row["finished_at"]),
                leaves=row["leaves"],
                items_seen=row["items_seen"],
                items_admitted=row["items_admitted"],
                items_persisted=row["items_persisted"],
                truncated_leaves=row["truncated_leaves"],
                page_failures=row["page_failures"],
            )
            for row in rows
        ]

    def language_stats(self) -> dict[str, dict[str, Any]]:
        stats: dict[str, dict[str, Any]] = {}
        with self._engine.connect() as conn:
            counts = conn.execute(
                sa.select(self._repos.c.main_language, sa.func.count()).group_by(
                    self._repos.c.main_language
                )
            ).all()
            passes = conn.execute(
                sa.select(self._runs.c.language, sa.func.max(self._runs.c.finished_at)).group_by(
                    self._runs.c.language
                )
            ).all()
        for language, n in counts:
            stats[language] = {"records": n, "last_pass": None}
        for language, finished in passes:
            stats.setdefault(language, {"records": 0, "last_pass": None})["last_pass"] = finished
        return stats

    # -- leases --------------------------------------------------------------

    def acquire_lease(self, name: str, owner: str, ttl_seconds: float, now: datetime) -> bool:
        expires = format_instant(now + timedelta(seconds=ttl_seconds))
        now_text = format_instant(now)
        with self._engine.begin() as conn:
            row = conn.execute(
                sa.select(self._leases).where(self._leases.c.name == name)
            ).mappings().first()
            if row is None:
                conn.execute(sa.insert(self._leases).values(name=name, owner=owner, expires_at=expires))
                return True
            if row["owner"] != owner and row["expires_at"] > now_text:
                return False
            conn.execute(
                self._leases.update()
                .where(self._leases.c.name == name)
                .values(owner=owner, expires_at=expires)
            )
            return True

    def renew_lease(self, name: str, owner: str, ttl_seconds: float, now: datetime) -> bool:
        expires = format_instant(now + timedelta(seconds=ttl_seconds))
        now_text = format_instant(now)
        with self._engine.begin() as conn:
            row = conn.execute(
                sa.select(self._leases).where(self._leases.c.name == name)
            ).mappings().first()
            if row is None or row["owner"] != owner or row["expires_at"] <= now_text:
                return False
            conn.execute(
                self._leases.update().where(self._leases.c.name == name).values(expires_at=expires)
            )
            return True

    def release_lease(self, name: str, owner: str) -> None:
        with self._engine.begin() as conn:
            conn.execute(
                self._leases.delete().where(
                    (self._leases.c.name == name) & (self._leases.c.owner == owner)
                )
            )

    def close(self) -> None:
        self._engine.dispose()


def open_store(url: str | None) -> RepositoryStore:
    """`memory://` (or None) for the dict store, anything else is a SQL URL."""
    if url is None or url == "memory://":
        return MemoryRepositoryStore()
    return SqlRepositoryStore(url)
