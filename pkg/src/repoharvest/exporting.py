"""Streaming CSV and JSON export of stored records.

Both formats emit the 25 canonical columns in canonical order and stream in
chunks, so exports never hold the full result set in memory. The CSV shape
is frozen (excel dialect, CRLF line ends, minimal quoting, empty cell for
an absent value); byte-stable output is part of the interface because
downstream diffing relies on it.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Iterable, Iterator

from .errors import ExportLimitExceeded
from .models import RepositoryRecord, TABLE_COLUMNS, export_row, json_item

# A single export is refused beyond this many records; narrow the filter.
EXPORT_CEILING = 1_000_000

EXPORT_FORMATS = ("csv", "json")


def ensure_exportable(total: int, ceiling: int = EXPORT_CEILING) -> None:
    if total > ceiling:
        raise ExportLimitExceeded(total, ceiling)


def csv_chunks(records: Iterable[RepositoryRecord]) -> Iterator[str]:
    """Header first, then one CSV line per record."""
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(TABLE_COLUMNS), dialect="excel")
    writer.writeheader()
    yield buffer.getvalue()
    for record in records:
        buffer.seek(0)
        buffer.truncate()
        writer.writerow(export_row(record))
        yield buffer.getvalue()


def json_chunks(records: Iterable[RepositoryRecord]) -> Iterator[str]:
    """One JSON array of column-keyed objects, streamed item by item."""
    yield "["
    first = True
    for record in records:
        prefix = "\n  " if first else ",\n  "
        first = False
        yield prefix + json.dumps(json_item(record), ensure_ascii=False)
    yield "\n]" if not first else "]"


def export_chunks(records: Iterable[RepositoryRecord], fmt: str) -> Iterator[str]:
    if fmt == "csv":
        return csv_chunks(records)
    if fmt == "json":
        return json_chunks(records)
    raise ValueError(f"unknown export format {fmt!r}")


def export_text(records: Iterable[RepositoryRecord], fmt: str) -> str:
    """Materialize a full export in one string. Tests and small batches."""
    return "".join(export_chunks(records, fmt))


def parse_json_export(text: str) -> list[RepositoryRecord]:
    """Inverse of the JSON export; used to prove exports lose nothing."""
    from .models import record_from_json_item

    items = json.loads(text)
    if not isinstance(items, list):
        raise ValueError("a JSON export is a top-level array")
    return [record_from_json_item(item) for item in items]


def parse_csv_export(text: str) -> list[RepositoryRecord]:
    """Inverse of the CSV export."""
    from .models import record_from_export_row

    reader = csv.DictReader(io.StringIO(text), dialect="excel")
    if reader.fieldnames != list(TABLE_COLUMNS):
        raise ValueError("CSV header does not match the canonical columns")
    return [record_from_export_row(row) for row in reader]
