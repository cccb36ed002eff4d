"""Shared domain types: the stored record, time intervals, search criteria, and filters.

All types here are immutable values with no I/O; they are safe to share
across threads. Instants are timezone-aware UTC at whole-second precision
(the forge reports seconds, so anything finer would be noise). Absent
optional metrics stay ``None``: a stored 0 is a real measurement, never a
stand-in for "the scrape failed".
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, fields
from datetime import datetime, timedelta, timezone
from enum import Enum
from typing import Any, Mapping

from .clock import utc_second
from .errors import FilterValidationError, RecordValidationError

# Repositories cannot predate the forge itself; mining windows clamp here.
MINING_EPOCH = datetime(2008, 1, 1, tzinfo=timezone.utc)

# The stored characteristics, in canonical column order. Exports and API
# payloads use exactly these names.
TABLE_COLUMNS: tuple[str, ...] = (
    "name",
    "commits",
    "last_commits_sha",
    "last_commits",
    "license",
    "branches",
    "default_branch",
    "contributors",
    "releases",
    "watchers",
    "stars",
    "forks",
    "is_fork_project",
    "size",
    "created_at",
    "pushed_at",
    "updated_at",
    "homepage",
    "main_language",
    "total_issues",
    "open_issues",
    "total_pull_requests",
    "open_pull_requests",
    "has_wiki",
    "archived",
)

# Column name -> record attribute. Only the latest-commit columns differ.
COLUMN_TO_FIELD: dict[str, str] = {
    **{c: c for c in TABLE_COLUMNS},
    "last_commits_sha": "last_commit_sha",
    "last_commits": "last_commit",
}
FIELD_TO_COLUMN: dict[str, str] = {f: c for c, f in COLUMN_TO_FIELD.items()}

# Fields mined from repository web pages rather than the search API. An
# absent value for one of these means "not scraped", so an upsert must not
# clobber a previously measured value with it.
PAGE_SOURCED_FIELDS: frozenset[str] = frozenset(
    {
        "commits",
        "last_commit_sha",
        "last_commit",
        "branches",
        "contributors",
        "releases",
        "watchers",
        "total_issues",
        "open_issues",
        "total_pull_requests",
        "open_pull_requests",
    }
)

_NAME_RE = re.compile(r"^[^/\s]+/[^/\s]+$")
_SHA_RE = re.compile(r"^[0-9a-f]{40}$")

_COUNT_FIELDS = (
    "commits",
    "branches",
    "contributors",
    "releases",
    "watchers",
    "stars",
    "forks",
    "size",
    "total_issues",
    "open_issues",
    "total_pull_requests",
    "open_pull_requests",
)
_REQUIRED_COUNTS = ("stars", "forks", "size")
_BOOL_FIELDS = ("is_fork_project", "has_wiki", "archived")
_INSTANT_FIELDS = ("created_at", "pushed_at", "updated_at", "last_commit", "last_crawled_at")
_STRING_FIELDS = ("name", "default_branch", "main_language", "license", "homepage", "last_commit_sha")


class IntervalField(str, Enum):
    """Which repository timestamp a search window constrains."""

    CREATED = "created"
    PUSHED = "pushed"


@dataclass(frozen=True, order=True)
class TimeInterval:
    """Half-open UTC interval [start, end), at least one second long."""

    start: datetime
    end: datetime

    def __post_init__(self) -> None:
        object.__setattr__(self, "start", utc_second(self.start))
        object.__setattr__(self, "end", utc_second(self.end))
        if self.start >= self.end:
            raise ValueError(f"interval start {self.start} must precede end {self.end}")
        if self.duration_seconds < 1:
            raise ValueError("interval must span at least one second")

    @property
    def duration_seconds(self) -> int:
        return int((self.end - self.start).total_seconds())

    def contains(self, instant: datetime) -> bool:
        return self.start <= instant < self.end

    def __str__(self) -> str:
        return f"[{self.start.isoformat()}, {self.end.isoformat()})"


@dataclass(frozen=True)
class SearchCriteria:
    """One search request shape: language, time window, and qualifiers."""

    language: str
    interval: TimeInterval
    interval_field: IntervalField = IntervalField.CREATED
    min_stars: int = 10
    include_forks: bool = True
    public_only: bool = True

    def __post_init__(self) -> None:
        if not self.language:
            raise ValueError("language must be nonempty")
        if self.min_stars < 0:
            raise ValueError("min_stars must be >= 0")


@dataclass(frozen=True)
class MiningCheckpoint:
    """Per-language resume marker: everything before `last_mined_until` is done."""

    language: str
    last_mined_until: datetime
    completed_initial_pass: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "last_mined_until", utc_second(self.last_mined_until))
        if self.last_mined_until < MINING_EPOCH:
            raise ValueError(f"checkpoint predates the mining epoch {MINING_EPOCH.isoformat()}")


@dataclass(frozen=True)
class RepositoryRecord:
    """The stored snapshot of one repository.

    `last_crawled_at` is bookkeeping (when we last refreshed the row) and is
    not part of the exported characteristics.
    """

    name: str
    main_language: str
    created_at: datetime
    pushed_at: datetime
    updated_at: datetime
    default_branch: str = "main"
    stars: int = 0
    forks: int = 0
    size: int = 0
    is_fork_project: bool = False
    has_wiki: bool = False
    archived: bool = False
    license: str | None = None
    homepage: str | None = None
    commits: int | None = None
    last_commit_sha: str | None = None
    last_commit: datetime | None = None
    branches: int | None = None
    contributors: int | None = None
    releases: int | None = None
    watchers: int | None = None
    total_issues: int | None = None
    open_issues: int | None = None
    total_pull_requests: int | None = None
    open_pull_requests: int | None = None
    last_crawled_at: datetime | None = None


def _coerce_instant(value: Any) -> datetime:
    if isinstance(value, datetime):
        return utc_second(value)
    if isinstance(value, str):
        text = value.strip()
        if text.endswith(("Z", "z")):
            text = text[:-1] + "+00:00"
        parsed = datetime.fromisoformat(text)
        return utc_second(parsed)
    raise ValueError(f"not an instant: {value!r}")


def _coerce_count(value: Any) -> int:
    if isinstance(value, bool):
        raise ValueError("boolean is not a count")
    if isinstance(value, int):
        result = value
    elif isinstance(value, str) and value.strip().isdigit():
        result = int(value.strip())
    else:
        raise ValueError(f"not a count: {value!r}")
    if result < 0:
        raise ValueError(f"count is negative: {result}")
    return result


def _coerce_bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, str) and value.strip().lower() in ("true", "false"):
        return value.strip().lower() == "true"
    raise ValueError(f"not a boolean: {value!r}")


def validate_record(candidate: Mapping[str, Any]) -> RepositoryRecord:
    """Turn a raw field map into a :class:`RepositoryRecord` or raise a diagnostic error.

    Total over adversarial input: every map either validates or raises
    :class:`RecordValidationError` naming the offending fields. Absent
    optional fields stay absent; they are never replaced with sentinel
    numbers. Empty-string optional text (license, homepage) is normalized
    to absent so the absent/empty distinction cannot leak in round trips.
    """
    if not isinstance(candidate, Mapping):
        raise RecordValidationError({"<input>": "not a field map"})
    problems: dict[str, str] = {}
    values: dict[str, Any] = {}

    def take(name: str) -> Any:
        value = candidate.get(name)
        if isinstance(value, str) and value == "":
            return None
        return value

    name = take("name")
    if not isinstance(name, str) or not _NAME_RE.match(name or ""):
        problems["name"] = "must look like owner/repo with nonempty halves"
    else:
        values["name"] = name

    for fname in ("main_language", "default_branch"):
        value = take(fname)
        if value is None and fname == "default_branch":
            continue  # defaults apply
        if not isinstance(value, str) or not value:
            problems[fname] = "must be a nonempty string"
        else:
            values[fname] = value

    for fname in ("license", "homepage"):
        value = take(fname)
        if value is None:
            continue
        if not isinstance(value, str):
            problems[fname] = "must be a string"
        else:
            values[fname] = value

    sha = take("last_commit_sha")
    if sha is not None:
        if not isinstance(sha, str) or not _SHA_RE.match(sha):
            problems["last_commit_sha"] = "must be 40 lowercase hex characters"
        else:
            values["last_commit_sha"] = sha

    for fname in _INSTANT_FIELDS:
        value = take(fname)
        if value is None:
            continue
        try:
            values[fname] = _coerce_instant(value)
        except (ValueError, OverflowError):
            problems[fname] = "must be a UTC instant or ISO-8601 string"
    if "created_at" not in values and "created_at" not in problems:
        problems["created_at"] = "is required"

    for fname in _COUNT_FIELDS:
        value = take(fname)
        if value is None:
            if fname in _REQUIRED_COUNTS:
                values[fname] = 0
            continue
        try:
            values[fname] = _coerce_count(value)
        except ValueError as exc:
            problems[fname] = str(exc)

    for fname in _BOOL_FIELDS:
        value = take(fname)
        if value is None:
            values[fname] = False
            continue
        try:
            values[fname] = _coerce_bool(value)
        except ValueError as exc:
            problems[fname] = str(exc)

    for open_f, total_f in (("open_issues", "total_issues"), ("open_pull_requests", "total_pull_requests")):
        open_v, total_v = values.get(open_f), values.get(total_f)
        if open_v is not None and total_v is not None and open_v > total_v:
            problems[open_f] = f"open count {open_v} exceeds total {total_v}"

    if problems:
        raise RecordValidationError(problems)

    created = values["created_at"]
    values.setdefault("pushed_at", created)
    values.setdefault("updated_at", created)
    return RepositoryRecord(**values)


def record_fields() -> tuple[str, ...]:
    return tuple(f.name for f in fields(RepositoryRecord))


@dataclass(frozen=True)
class Bounds:
    """Inclusive range with optional ends, over counts or instants."""

    lo: Any = None
    hi: Any = None

    def __post_init__(self) -> None:
        if self.lo is not None and self.hi is not None and self.lo > self.hi:
            raise ValueError(f"range min {self.lo} exceeds max {self.hi}")

    def admits(self, value: Any) -> bool:
        """Inclusive containment; absent values fail any bounded clause."""
        if value is None:
            return False
        if self.lo is not None and value < self.lo:
            return False
        if self.hi is not None and value > self.hi:
            return False
        return True


# RepoFilter range name -> record field it constrains.
FILTER_RANGE_FIELDS: dict[str, str] = {
    "commits": "commits",
    "contributors": "contributors",
    "issues": "total_issues",
    "pulls": "total_pull_requests",
    "branches": "branches",
    "releases": "releases",
    "stars": "stars",
    "watchers": "watchers",
    "forks": "forks",
}


@dataclass(frozen=True)
class RepoFilter:
    """A conjunction of user-facing selection criteria.

    Every clause left unset matches everything; set clauses must all hold.
    Range clauses are inclusive, and a record whose field is absent fails
    any range clause on that field.
    """

    name_contains: str | None = None
    license_equals: str | None = None
    language_equals: str | None = None
    commits: Bounds | None = None
    contributors: Bounds | None = None
    issues: Bounds | None = None
    pulls: Bounds | None = None
    branches: Bounds | None = None
    releases: Bounds | None = None
    stars: Bounds | None = None
    watchers: Bounds | None = None
    forks: Bounds | None = None
    created_between: Bounds | None = None
    last_commit_between: Bounds | None = None
    exclude_forks: bool = False
    only_with_license: bool = False
    only_with_open_issues: bool = False
    exclude_archived: bool = False

    def __post_init__(self) -> None:
        for fname in (*FILTER_RANGE_FIELDS, "created_between", "last_commit_between"):
            bounds = getattr(self, fname)
            if bounds is None:
                continue
            if not isinstance(bounds, Bounds):
                raise FilterValidationError(fname, "expected Bounds")
            # Bounds.__post_init__ already rejects lo > hi; re-validate here so
            # filters built from already-constructed Bounds stay covered.
            if bounds.lo is not None and bounds.hi is not None and bounds.lo > bounds.hi:
                raise FilterValidationError(fname, f"min {bounds.lo} exceeds max {bounds.hi}")


def matches_filter(record: RepositoryRecord, flt: RepoFilter) -> bool:
    """Evaluate the filter conjunction against one record."""
    if flt.name_contains is not None and flt.name_contains.lower() not in record.name.lower():
        return False
    if flt.license_equals is not None and record.license != flt.license_equals:
        return False
    if flt.language_equals is not None and record.main_language != flt.language_equals:
        return False
    for filter_name, field_name in FILTER_RANGE_FIELDS.items():
        bounds = getattr(flt, filter_name)
        if bounds is not None and not bounds.admits(getattr(record, field_name)):
            return False
    if flt.created_between is not None and not flt.created_between.admits(record.created_at):
        return False
    if flt.last_commit_between is not None and not flt.last_commit_between.admits(record.last_commit):
        return False
    if flt.exclude_forks and record.is_fork_project:
        return False
    if flt.only_with_license and record.license is None:
        return False
    if flt.only_with_open_issues and not (record.open_issues or 0) > 0:
        return False
    if flt.exclude_archived and record.archived:
        return False
    return True


def format_instant(dt: datetime) -> str:
    """Canonical wire form, e.g. ``2020-03-01T12:00:00Z``."""
    return utc_second(dt).strftime("%Y-%m-%dT%H:%M:%SZ")


def export_cell(value: Any) -> str:
    """Render one field for a CSV cell; absent becomes the empty cell."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, datetime):
        return format_instant(value)
    return str(value)


def export_row(record: RepositoryRecord) -> dict[str, str]:
    """The record as CSV cells keyed by canonical column name."""
    return {col: export_cell(getattr(record, COLUMN_TO_FIELD[col])) for col in TABLE_COLUMNS}


def json_item(record: RepositoryRecord) -> dict[str, Any]:
    """The record as a JSON-ready mapping; absent fields serialize as null."""
    item: dict[str, Any] = {}
    for col in TABLE_COLUMNS:
        value = getattr(record, COLUMN_TO_FIELD[col])
        item[col] = format_instant(value) if isinstance(value, datetime) else value
    return item


def record_from_export_row(row: Mapping[str, str]) -> RepositoryRecord:
    """Parse a CSV export row (column name -> cell string) back into a record."""
    raw: dict[str, Any] = {}
    for col in TABLE_COLUMNS:
        cell = row.get(col, "")
        fname = COLUMN_TO_FIELD[col]
        if cell == "":
            continue
        raw[fname] = cell
    return validate_record(raw)


def record_from_json_item(item: Mapping[str, Any]) -> RepositoryRecord:
    """Parse a JSON export item back into a record."""
    raw = {COLUMN_TO_FIELD[col]: item[col] for col in TABLE_COLUMNS if item.get(col) is not None}
    return validate_record(raw)
