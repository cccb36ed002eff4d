"""HTTP interface: filtered listings, single lookups, exports, stats.

Query parameters are parsed by hand rather than through the framework's
validation so that every malformed parameter is reported at once under a
stable ``{"errors": {param: message}}`` shape, unknown parameters are
ignored, and an inverted range is distinguished (422) from an
unparseable value (400).
"""

from __future__ import annotations

from datetime import datetime, timezone
from typing import Any, Iterator, Mapping

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse

from .errors import ExportLimitExceeded
from .exporting import EXPORT_CEILING, csv_chunks, ensure_exportable, json_chunks
from .models import (
    TABLE_COLUMNS,
    Bounds,
    RepoFilter,
    format_instant,
    json_item,
)
from .store import RepositoryStore

DEFAULT_PAGE_SIZE = 50
MAX_PAGE_SIZE = 500

_TEXT_PARAMS = {
    "nameContains": "name_contains",
    "language": "language_equals",
    "license": "license_equals",
}
_COUNT_RANGE_PARAMS = {
    "commits": "commits",
    "contributors": "contributors",
    "issues": "issues",
    "pulls": "pulls",
    "branches": "branches",
    "releases": "releases",
    "stars": "stars",
    "watchers": "watchers",
    "forks": "forks",
}
_INSTANT_RANGE_PARAMS = {
    "created": "created_between",
    "lastCommit": "last_commit_between",
}
_FLAG_PARAMS = {
    "excludeForks": "exclude_forks",
    "onlyWithLicense": "only_with_license",
    "onlyWithOpenIssues": "only_with_open_issues",
    "excludeArchived": "exclude_archived",
}

_INSTANT_FORMATS = ("%Y-%m-%d", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M:%SZ")


def _parse_instant(text: str) -> datetime:
    for fmt in _INSTANT_FORMATS:
        try:
            return datetime.strptime(text, fmt).replace(tzinfo=timezone.utc)
        except ValueError:
            continue
    raise ValueError("expected YYYY-MM-DD or YYYY-MM-DDTHH:MM:SSZ")


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ValueError("expected true or false")


def _parse_count(text: str) -> int:
    value = int(text.strip())
    if value < 0:
        raise ValueError("must not be negative")
    return value


class _ParsedQuery:
    """One request's filter plus the paging and ordering that rode with it."""

    def __init__(self) -> None:
        self.errors: dict[str, str] = {}
        self.inverted: dict[str, str] = {}
        self.applied: dict[str, Any] = {}
        self.filter = RepoFilter()
        self.page = 1
        self.size = DEFAULT_PAGE_SIZE
        self.sort = "stars"
        self.order = "desc"

    @property
    def offset(self) -> int:
        return (self.page - 1) * self.size


def _bounds(low, high):
    if low is None and high is None:
        return None
    return Bounds(low, high)


def _parse_query(params: Mapping[str, str]) -> _ParsedQuery:
    parsed = _ParsedQuery()
    fields: dict[str, Any] = {}

    for param, field in _TEXT_PARAMS.items():
        raw = params.get(param)
        if raw is not None and raw != "":
            fields[field] = raw
            parsed.applied[param] = raw

    for param, field in _FLAG_PARAMS.items():
        raw = params.get(param)
        if raw is None or raw == "":
            continue
        try:
            value = _parse_bool(raw)
        except ValueError as err:
            parsed.errors[param] = str(err)
            continue
        if value:
            fields[field] = True
            parsed.applied[param] = True

    def range_pair(prefix: str, parse):
        low = high = None
        for suffix in ("Min", "Max"):
            raw = params.get(prefix + suffix)
            if raw is None or raw == "":
                continue
            try:
                value = parse(raw)
            except ValueError as err:
                parsed.errors[prefix + suffix] = str(err)
                continue
            if suffix == "Min":
                low = value
            else:
                high = value
        return low, high

    for param, field in _COUNT_RANGE_PARAMS.items():
        low, high = range_pair(param, _parse_count)
        if low is not None and high is not None and low > high:
            parsed.inverted[param] = "minimum exceeds maximum"
            continue
        bounds = _bounds(low, high)
        if bounds is not None:
            fields[field] = bounds
            if low is not None:
                parsed.applied[param + "Min"] = low
            if high is not None:
                parsed.applied[param + "Max"] = high

    for param, field in _INSTANT_RANGE_PARAMS.items():
        low, high = range_pair(param, _parse_instant)
        if low is not None and high is not None and low > high:
            parsed.inverted[param] = "minimum exceeds maximum"
            continue
        bounds = _bounds(low, high)
        if bounds is not None:
            fields[field] = bounds
            if low is not None:
                parsed.applied[param + "Min"] = format_instant(low)
            if high is not None:
                parsed.applied[param + "Max"] = format_instant(high)

    raw_page = params.get("page")
    if raw_page:
        try:
            parsed.page = int(raw_page)
            if parsed.page < 1:
                raise ValueError
        except ValueError:
            parsed.errors["page"] = "expected a positive integer"

    raw_size = params.get("size")
    if raw_size:
        try:
            parsed.size = int(raw_size)
            if not 1 <= parsed.size <= MAX_PAGE_SIZE:
                raise ValueError
        except ValueError:
            parsed.errors["size"] = f"expected an integer between 1 and {MAX_PAGE_SIZE}"

    raw_sort = params.get("sort")
    if raw_sort:
        if raw_sort in TABLE_COLUMNS:
            parsed.sort = raw_sort
        else:
            parsed.errors["sort"] = "not a sortable column"

    raw_order = params.get("order")
    if raw_order:
        if raw_order in ("asc", "desc"):
            parsed.order = raw_order
        else:
            parsed.errors["order"] = "expected asc or desc"

    if not parsed.errors:
        parsed.filter = RepoFilter(**fields)
    return parsed


def _failure(parsed: _ParsedQuery) -> JSONResponse | None:
    if parsed.errors:
        return JSONResponse(status_code=400, content={"errors": parsed.errors})
    if parsed.inverted:
        return JSONResponse(status_code=422, content={"errors": parsed.inverted})
    return None


def create_app(
    store: RepositoryStore,
    *,
    cors_origin: str | None = None,
    export_ceiling: int = EXPORT_CEILING,
) -> FastAPI:
    """The read-side application over one store."""
    app = FastAPI(title="repoharvest", docs_url=None, redoc_url=None)
    if cors_origin:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=[cors_origin],
            allow_methods=["GET"],
            allow_headers=["*"],
        )

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/api/stats")
    def stats() -> dict:
        return {"total_records": store.count(), "languages": store.language_stats()}

    @app.get("/api/repos")
    def list_repositories(request: Request):
        parsed = _parse_query(request.query_params)
        failure = _failure(parsed)
        if failure is not None:
            return failure
        total = store.count(parsed.filter)
        rows = store.query(
            parsed.filter,
            sort=parsed.sort,
            order=parsed.order,
            limit=parsed.size,
            offset=parsed.offset,
        )
        return {
            "total": total,
            "page": parsed.page,
            "size": parsed.size,
            "sort": parsed.sort,
            "order": parsed.order,
            "filter": parsed.applied,
            "items": [json_item(record) for record in rows],
        }

    @app.get("/api/repos/export")
    def export_repositories(request: Request):
        parsed = _parse_query(request.query_params)
        fmt = request.query_params.get("format", "csv")
        if fmt not in ("csv", "json"):
            parsed.errors["format"] = "expected csv or json"
        failure = _failure(parsed)
        if failure is not None:
            return failure
        try:
            ensure_exportable(store.count(parsed.filter), export_ceiling)
        except ExportLimitExceeded as err:
            return JSONResponse(
                status_code=413,
                content={"errors": {"export": f"{err.total} rows exceed the export ceiling of {err.ceiling}"}},
            )

        def chunks() -> Iterator[str]:
            rows = store.iter_filtered(parsed.filter, sort=parsed.sort, order=parsed.order)
            producer = csv_chunks if fmt == "csv" else json_chunks
            yield from producer(rows)

        media_type = "text/csv" if fmt == "csv" else "application/json"
        return StreamingResponse(
            chunks(),
            media_type=media_type,
            headers={"Content-Disposition": f'attachment; filename="repositories.{fmt}"'},
        )

    @app.get("/api/repos/{owner}/{repo}")
    def get_repository(owner: str, repo: str):
        record = store.get(f"{owner}/{repo}")
        if record is None:
            return JSONResponse(status_code=404, content={"errors": {"name": "no such repository"}})
        return json_item(record)

    return app
