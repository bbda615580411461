"""Columnar in-memory tables with typed values, null handling, and CSV ingestion.

A cell value is one of: None (null), bool, int (64-bit range), float, or str.
Every column holds exactly one non-null value kind; nulls are permitted anywhere.
Datasets and batches are immutable after construction and safe to share across
concurrent readers.
"""

from __future__ import annotations

import csv
import enum
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import CsvParseError, SchemaError

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

_INT_RE = re.compile(r"^[+-]?\d+$")
_REAL_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_SPECIAL_REALS = {"nan", "inf", "+inf", "-inf", "infinity", "+infinity", "-infinity"}


class ValueKind(enum.Enum):
    BOOLEAN = "boolean"
    INTEGER = "integer"
    REAL = "real"
    TEXT = "text"


Value = None | bool | int | float | str


def kind_of(value: Value) -> ValueKind:
    """Value kind of a single non-null cell value."""
    if isinstance(value, bool):  # bool before int: bool is an int subclass
        return ValueKind.BOOLEAN
    if isinstance(value, int):
        return ValueKind.INTEGER
    if isinstance(value, float):
        return ValueKind.REAL
    if isinstance(value, str):
        return ValueKind.TEXT
    raise TypeError(f"unsupported cell value {value!r}")


@dataclass(frozen=True)
class ColumnVector:
    """A named column: values plus an aligned null mask."""

    name: str
    inferred_type: ValueKind
    values: tuple[Value, ...]
    null_mask: tuple[bool, ...]

    def __post_init__(self):
        if len(self.values) != len(self.null_mask):
            raise ValueError(f"column {self.name}: values and null mask differ in length")
        for v, is_null in zip(self.values, self.null_mask):
            if is_null:
                if v is not None:
                    raise ValueError(f"column {self.name}: masked cell carries a value")
            elif v is None or kind_of(v) is not self.inferred_type:
                raise ValueError(
                    f"column {self.name}: cell {v!r} does not match {self.inferred_type.value}"
                )

    def __len__(self) -> int:
        return len(self.values)

    @property
    def null_count(self) -> int:
        return sum(self.null_mask)

    def non_null_values(self) -> list[Value]:
        return [v for v, m in zip(self.values, self.null_mask) if not m]

    def is_numeric(self) -> bool:
        return self.inferred_type in (ValueKind.INTEGER, ValueKind.REAL)


def column_from_values(name: str, values: Sequence[Value], kind: ValueKind | None = None) -> ColumnVector:
    """Build a column from plain Python values (None marks null).

    The kind is inferred from the non-null values when not given; mixed
    non-null kinds are rejected.
    """
    mask = tuple(v is None for v in values)
    kinds = {kind_of(v) for v in values if v is not None}
    if kind is None:
        if len(kinds) > 1:
            raise ValueError(f"column {name}: mixed value kinds {sorted(k.value for k in kinds)}")
        kind = next(iter(kinds)) if kinds else ValueKind.TEXT
    return ColumnVector(name, kind, tuple(values), mask)


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of equal-length columns with unique names."""

    columns: tuple[ColumnVector, ...]
    row_count: int = -1  # derived from the columns when negative

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate column names: {names}")
        lengths = {len(c) for c in self.columns}
        if len(lengths) > 1:
            raise SchemaError(f"columns differ in length: {sorted(lengths)}")
        derived = len(self.columns[0]) if self.columns else max(self.row_count, 0)
        if self.row_count >= 0 and self.columns and derived != self.row_count:
            raise SchemaError(f"row_count {self.row_count} does not match columns ({derived})")
        object.__setattr__(self, "row_count", derived)

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> ColumnVector:
        for c in self.columns:
            if c.name == name:
                return c
        raise SchemaError(f"unknown column {name!r}")

    def has_column(self, name: str) -> bool:
        return any(c.name == name for c in self.columns)

    def row(self, i: int) -> dict[str, Value]:
        return {c.name: c.values[i] for c in self.columns}


def dataset_from_rows(names: Sequence[str], rows: Iterable[Sequence[Value]]) -> Dataset:
    """Convenience constructor from row tuples (None marks null)."""
    materialized = [list(r) for r in rows]
    for r in materialized:
        if len(r) != len(names):
            raise SchemaError(f"row of width {len(r)} does not match {len(names)} columns")
    cols = [
        column_from_values(name, [r[i] for r in materialized])
        for i, name in enumerate(names)
    ]
    return Dataset(tuple(cols))


@dataclass(frozen=True)
class Batch:
    """One delivery of the dataset, with provenance for bookkeeping."""

    id: str
    data: Dataset
    provenance: str = "clean"


# ---------------------------------------------------------------------------
# Type inference and CSV parsing
# ---------------------------------------------------------------------------

def _parses_as_int(cell: str) -> bool:
    return bool(_INT_RE.match(cell))


def _parses_as_real(cell: str) -> bool:
    return bool(_REAL_RE.match(cell)) or cell.lower() in _SPECIAL_REALS


def infer_types(raw_columns: Sequence[Sequence[str]]) -> list[ValueKind]:
    """Infer one value kind per column of raw text cells.

    A column is integer iff every non-empty cell parses as a 64-bit integer
    (overflow demotes to real); else real iff every non-empty cell parses as
    a number; else boolean iff every non-empty cell is true/false (any case);
    else text. Empty cells are ignored.
    """
    kinds: list[ValueKind] = []
    for raw in raw_columns:
        cells = [c for c in raw if c != ""]
        if all(_parses_as_int(c) for c in cells):
            if all(INT64_MIN <= int(c) <= INT64_MAX for c in cells):
                kinds.append(ValueKind.INTEGER)
            else:
                kinds.append(ValueKind.REAL)
        elif all(_parses_as_real(c) for c in cells):
            kinds.append(ValueKind.REAL)
        elif all(c.lower() in ("true", "false") for c in cells):
            kinds.append(ValueKind.BOOLEAN)
        else:
            kinds.append(ValueKind.TEXT)
    return kinds


def _materialize(cell: str, kind: ValueKind) -> Value:
    if cell == "":
        return None
    if kind is ValueKind.INTEGER:
        return int(cell)
    if kind is ValueKind.REAL:
        v = float(cell)
        return None if math.isnan(v) else v  # literal NaN normalizes to null
    if kind is ValueKind.BOOLEAN:
        return cell.lower() == "true"
    return cell


def parse_csv_text(text: str) -> Dataset:
    """Parse CSV content (header row required, RFC-4180 quoting)."""
    reader = csv.reader(text.splitlines(keepends=True))
    try:
        header = next(reader)
    except StopIteration:
        raise CsvParseError("empty file: header row required", line=1)
    except csv.Error as exc:
        raise CsvParseError(str(exc), line=1)
    if len(set(header)) != len(header):
        raise SchemaError(f"duplicate header names in {header}")
    raw_rows: list[list[str]] = []
    try:
        for row in reader:
            if not row and len(header) == 1:
                row = [""]  # blank line == single null field in a width-1 table
            if len(row) != len(header):
                raise CsvParseError(
                    f"expected {len(header)} fields, found {len(row)}", line=reader.line_num
                )
            raw_rows.append(row)
    except csv.Error as exc:
        raise CsvParseError(str(exc), line=reader.line_num)
    raw_columns = [[row[i] for row in raw_rows] for i in range(len(header))]
    kinds = infer_types(raw_columns)
    cols = []
    for name, raw, kind in zip(header, raw_columns, kinds):
        values = tuple(_materialize(cell, kind) for cell in raw)
        mask = tuple(v is None for v in values)
        cols.append(ColumnVector(name, kind, values, mask))
    return Dataset(tuple(cols))


def load_table(path: str | Path) -> Dataset:
    """Load a CSV file into a Dataset. The source file is never modified."""
    return parse_csv_text(Path(path).read_text(encoding="utf-8"))


def _render_cell(value: Value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "NaN"
        return repr(value)
    return str(value)


def render_csv_text(d: Dataset) -> str:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(d.column_names)
    for i in range(d.row_count):
        writer.writerow([_render_cell(c.values[i]) for c in d.columns])
    return buf.getvalue()


def write_csv(d: Dataset, path: str | Path) -> None:
    Path(path).write_text(render_csv_text(d), encoding="utf-8")


# ---------------------------------------------------------------------------
# Projections and row selection
# ---------------------------------------------------------------------------

def select_columns(d: Dataset, names: Sequence[str]) -> Dataset:
    """Project onto the named columns, in the given order."""
    cols = tuple(d.column(n) for n in names)
    return Dataset(cols, row_count=d.row_count)


def take_rows(d: Dataset, indices: Sequence[int]) -> Dataset:
    """New dataset containing the given rows, in the given order."""
    cols = []
    for c in d.columns:
        values = tuple(c.values[i] for i in indices)
        mask = tuple(c.null_mask[i] for i in indices)
        cols.append(ColumnVector(c.name, c.inferred_type, values, mask))
    return Dataset(tuple(cols), row_count=len(indices))


# ---------------------------------------------------------------------------
# Batch registry: batches/<id>.csv + batches/<id>.meta.json
# ---------------------------------------------------------------------------

def save_batch(directory: str | Path, batch: Batch) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_csv(batch.data, directory / f"{batch.id}.csv")
    meta = {"id": batch.id, "provenance": batch.provenance}
    (directory / f"{batch.id}.meta.json").write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def load_batch(directory: str | Path, batch_id: str) -> Batch:
    directory = Path(directory)
    data = load_table(directory / f"{batch_id}.csv")
    meta_path = directory / f"{batch_id}.meta.json"
    provenance = "unknown"
    if meta_path.exists():
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        provenance = meta.get("provenance", provenance)
    return Batch(id=batch_id, data=data, provenance=provenance)


def list_batches(directory: str | Path) -> list[str]:
    directory = Path(directory)
    return sorted(p.stem for p in directory.glob("*.csv"))
