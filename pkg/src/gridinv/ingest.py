"""Telemetry CSV ingestion and per-attribute kind inference.

The on-disk format is plain UTF-8 CSV: the first column is literally
``timestamp`` (integer epoch seconds or ISO-8601), remaining headers are
dot-separated attribute paths. Booleans are serialized ``True``/``False``,
breaker status codes as the two-character strings ``10``/``01``/``11``.
Empty cells are explicit missing values.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Iterable, Optional, Union

from .errors import IngestError, SchemaError

KINDS = ("continuous", "boolean", "status-code", "nominal")
STATUS_CODES = ("10", "01", "11")

Scalar = Union[float, bool, str]


@dataclass(frozen=True)
class AttributeSchema:
    """One attribute: dot-separated path, value kind, optional unit."""

    name: str
    kind: str
    unit: Optional[str] = None

    def __post_init__(self):
        if not self.name:
            raise SchemaError("attribute name must be non-empty")
        if self.kind not in KINDS:
            raise SchemaError(f"unknown attribute kind {self.kind!r} for {self.name!r}")


@dataclass(frozen=True)
class RawRecord:
    """One sampling instant; values maps attribute name -> scalar or None (missing)."""

    timestamp: int
    values: dict


@dataclass
class RawDataset:
    """Ordered timestamped records plus their attribute schema."""

    schema: list
    records: list
    scenario_meta: Optional[dict] = None

    def attribute_names(self):
        return [a.name for a in self.schema]

    def column(self, name, skip_missing=True):
        """All values of one attribute in record order."""
        out = []
        for rec in self.records:
            v = rec.values.get(name)
            if v is None and skip_missing:
                continue
            out.append(v)
        return out

    def __len__(self):
        return len(self.records)


def _parse_timestamp(text, row_no):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        dt = datetime.fromisoformat(text)
    except ValueError:
        raise IngestError(f"row {row_no}: unparseable timestamp {text!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def _is_float(text):
    try:
        float(text)
        return True
    except ValueError:
        return False


def _infer_kind_from_text(name, cells):
    present = [c for c in cells if c != ""]
    if not present:
        return "nominal"
    distinct = set(present)
    if distinct <= set(STATUS_CODES):
        return "status-code"
    if distinct <= {"True", "False"}:
        return "boolean"
    numeric = [_is_float(c) for c in present]
    if all(numeric):
        return "continuous"
    if any(numeric):
        raise SchemaError(f"column {name!r}: mixed numeric/string payload")
    return "nominal"


def _coerce(name, kind, text, row_no):
    if text == "":
        return None
    if kind == "continuous":
        try:
            return float(text)
        except ValueError:
            raise IngestError(
                f"row {row_no}, column {name!r}: expected number, got {text!r}"
            ) from None
    if kind == "boolean":
        if text == "True":
            return True
        if text == "False":
            return False
        raise IngestError(f"row {row_no}, column {name!r}: expected True/False, got {text!r}")
    if kind == "status-code":
        if text not in STATUS_CODES:
            raise IngestError(
                f"row {row_no}, column {name!r}: unknown status code {text!r}"
            )
        return text
    return text  # nominal: keep the literal string


def _read_text(csv_source):
    if isinstance(csv_source, bytes):
        return csv_source.decode("utf-8")
    if isinstance(csv_source, (str, Path)):
        p = Path(csv_source)
        return p.read_text(encoding="utf-8")
    data = csv_source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data


def parse_dataset(csv_source, schema_hint=None):
    """Parse a telemetry CSV into a RawDataset.

    ``schema_hint`` (list of AttributeSchema) overrides kind inference per
    attribute; attributes not named in the hint are still inferred.
    """
    text = _read_text(csv_source)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise IngestError("empty input: no header row") from None
    if not header or header[0] != "timestamp":
        raise IngestError("malformed header: first column must be 'timestamp'")
    names = header[1:]
    if any(not n for n in names):
        raise IngestError("malformed header: empty attribute name")
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise IngestError(f"malformed header: duplicate attribute names {dupes}")

    timestamps = []
    raw_rows = []
    for row_no, row in enumerate(reader, start=2):
        if len(row) != len(header):
            raise IngestError(
                f"row {row_no}: expected {len(header)} cells, got {len(row)}"
            )
        ts = _parse_timestamp(row[0], row_no)
        if timestamps and ts < timestamps[-1]:
            raise IngestError(f"non-monotonic timestamp at row {row_no}")
        timestamps.append(ts)
        raw_rows.append(row[1:])

    hint_by_name = {a.name: a for a in (schema_hint or [])}
    schema = []
    for col, name in enumerate(names):
        hinted = hint_by_name.get(name)
        if hinted is not None:
            schema.append(hinted)
        else:
            kind = _infer_kind_from_text(name, [r[col] for r in raw_rows])
            schema.append(AttributeSchema(name, kind))

    records = []
    for i, row in enumerate(raw_rows):
        values = {
            a.name: _coerce(a.name, a.kind, row[c], i + 2)
            for c, a in enumerate(schema)
        }
        records.append(RawRecord(timestamps[i], values))
    return RawDataset(schema=schema, records=records)


def infer_schema(dataset):
    """Re-derive attribute kinds from a dataset's typed values.

    Deterministic: kind depends only on the multiset of column values, not
    on record order.
    """
    out = []
    for attr in dataset.schema:
        vals = dataset.column(attr.name)
        if not vals:
            out.append(AttributeSchema(attr.name, "nominal", attr.unit))
            continue
        if all(isinstance(v, bool) for v in vals):
            kind = "boolean"
        elif all(isinstance(v, str) for v in vals):
            kind = "status-code" if set(vals) <= set(STATUS_CODES) else "nominal"
        elif all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals):
            kind = "continuous"
        else:
            raise SchemaError(f"column {attr.name!r}: mixed numeric/string payload")
        out.append(AttributeSchema(attr.name, kind, attr.unit))
    return out


def _format_cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "True" if value else "False"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_dataset(dataset):
    """Render a RawDataset back to CSV text (lossless round-trip)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    names = dataset.attribute_names()
    writer.writerow(["timestamp"] + names)
    for rec in dataset.records:
        writer.writerow([str(rec.timestamp)] + [_format_cell(rec.values.get(n)) for n in names])
    return buf.getvalue()


def write_dataset(dataset, path):
    Path(path).write_text(serialize_dataset(dataset), encoding="utf-8")
