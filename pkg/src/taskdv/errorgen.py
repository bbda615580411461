"""Seeded tabular error injection.

Nineteen operator kinds across five families (structural, integrity,
numerical, textual, format) corrupt a clean dataset into an evaluation
batch. Row selection samples floor(row_fraction * n) indices without
replacement from a counter-based PRNG (numpy Philox keyed by the config
seed and the operator position), so identical (dataset, config) pairs
produce byte-identical batches on every platform.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, SchemaError
from .tabular import Batch, ColumnVector, Dataset, Value, ValueKind, column_from_values, kind_of

FAMILIES: dict[str, tuple[str, ...]] = {
    "structural": ("drop_column", "rename_column", "duplicate_rows", "shuffle_column_order"),
    "integrity": (
        "inject_nulls",
        "duplicate_key_values",
        "break_conditional_dependency",
        "out_of_domain_category",
    ),
    "numerical": ("scale_values", "inject_outliers", "negate_values", "constant_collapse"),
    "textual": ("case_flip", "whitespace_padding", "truncate_strings", "unicode_confusables"),
    "format": ("numeric_to_string_locale", "date_format_shift", "boolean_encoding_shift"),
}

MAX_COLUMN_FRACTION = 0.5

_CONFUSABLES = str.maketrans(
    {
        "a": "а", "c": "с", "e": "е", "o": "о", "p": "р", "x": "х",
        "A": "А", "C": "С", "E": "Е", "O": "О", "P": "Р", "X": "Х",
    }
)


def catalog() -> list[str]:
    """The 19 operator kinds, grouped by family."""
    return [kind for family in FAMILIES.values() for kind in family]


def family_of(kind: str) -> str:
    for family, kinds in FAMILIES.items():
        if kind in kinds:
            return family
    raise ConfigError(f"unknown operator kind {kind!r}")


@dataclass(frozen=True)
class ErrorOperator:
    kind: str
    target_columns: tuple[str, ...] = ()
    row_fraction: float = 1.0
    params: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in catalog():
            raise ConfigError(f"unknown operator kind {self.kind!r}")
        if not 0.0 < self.row_fraction <= 1.0:
            raise ConfigError(f"row_fraction must be in (0, 1], got {self.row_fraction}")


@dataclass(frozen=True)
class ErrorConfig:
    id: str
    operators: tuple[ErrorOperator, ...]
    seed: int


def save_config(cfg: ErrorConfig, path: str | Path) -> None:
    payload = {
        "id": cfg.id,
        "seed": cfg.seed,
        "operators": [
            {
                "kind": op.kind,
                "target_columns": list(op.target_columns),
                "row_fraction": op.row_fraction,
                "params": dict(op.params),
            }
            for op in cfg.operators
        ],
    }
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def load_config(path: str | Path) -> ErrorConfig:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    operators = tuple(
        ErrorOperator(
            kind=op["kind"],
            target_columns=tuple(op.get("target_columns", ())),
            row_fraction=op.get("row_fraction", 1.0),
            params=op.get("params", {}),
        )
        for op in payload["operators"]
    )
    return ErrorConfig(id=payload["id"], operators=operators, seed=payload["seed"])


_REQUIRED_PARAMS = {
    "rename_column": ("new_name",),
    "break_conditional_dependency": ("condition_column", "condition_value"),
    "out_of_domain_category": ("value",),
}


def validate_config(cfg: ErrorConfig, schema: Sequence[str]) -> list[str]:
    """Static checks; returns a list of problems (empty means ok)."""
    problems: list[str] = []
    live = list(schema)
    touched: set[str] = set()
    for idx, op in enumerate(cfg.operators):
        for name in _REQUIRED_PARAMS.get(op.kind, ()):
            if name not in op.params:
                problems.append(f"operator {idx} ({op.kind}): missing param {name!r}")
        targets = op.target_columns
        if op.kind in ("duplicate_rows", "shuffle_column_order"):
            targets = ()
        for col in targets:
            if col not in live:
                problems.append(f"operator {idx} ({op.kind}): unknown column {col!r}")
            touched.add(col)
        cond = op.params.get("condition_column")
        if op.kind == "break_conditional_dependency" and isinstance(cond, str):
            if cond not in live:
                problems.append(f"operator {idx} ({op.kind}): unknown condition column {cond!r}")
        if op.kind == "drop_column":
            live = [c for c in live if c not in targets]
        elif op.kind == "rename_column":
            new_name = op.params.get("new_name")
            if isinstance(new_name, str) and targets:
                if new_name in live:
                    problems.append(f"operator {idx}: rename to existing column {new_name!r}")
                live = [new_name if c == targets[0] else c for c in live]
    if schema and len(touched) / len(schema) > MAX_COLUMN_FRACTION:
        problems.append(
            f"config touches {len(touched)}/{len(schema)} columns, "
            f"more than the {MAX_COLUMN_FRACTION:.0%} limit"
        )
    return problems


# ---------------------------------------------------------------------------
# Application
# ---------------------------------------------------------------------------

def _rng(seed: int, op_index: int, lane: int = 0) -> np.random.Generator:
    key = np.array([seed % 2**64, (op_index << 16) + lane], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _sample_rows(n: int, fraction: float, seed: int, op_index: int, lane: int) -> list[int]:
    k = int(fraction * n)
    if k <= 0 or n == 0:
        return []
    rng = _rng(seed, op_index, lane)
    picked = rng.choice(n, size=k, replace=False)
    return sorted(int(i) for i in picked)


class _Table:
    """Mutable column-major staging area while operators run."""

    def __init__(self, d: Dataset):
        self.names = list(d.column_names)
        self.values: dict[str, list[Value]] = {c.name: list(c.values) for c in d.columns}
        self.row_count = d.row_count

    def to_dataset(self) -> Dataset:
        cols = [column_from_values(name, self.values[name]) for name in self.names]
        return Dataset(tuple(cols), row_count=self.row_count)

    def require(self, name: str) -> list[Value]:
        if name not in self.values:
            raise SchemaError(f"unknown column {name!r}")
        return self.values[name]


def _numeric_stats(values: list[Value]) -> tuple[float, float] | None:
    nums = [float(v) for v in values if v is not None]
    if not nums:
        return None
    mean = sum(nums) / len(nums)
    std = (sum((v - mean) ** 2 for v in nums) / len(nums)) ** 0.5
    return mean, std


def _is_int_column(values: list[Value]) -> bool:
    return all(v is None or (isinstance(v, int) and not isinstance(v, bool)) for v in values)


def _as_text_column(values: list[Value]) -> list[Value]:
    from .tabular import _render_cell

    return [None if v is None else _render_cell(v) for v in values]


def _apply_operator(table: _Table, op: ErrorOperator, op_index: int, seed: int) -> None:
    n = table.row_count
    if op.kind == "drop_column":
        for col in op.target_columns:
            table.require(col)
            table.names.remove(col)
            del table.values[col]
        return
    if op.kind == "rename_column":
        old = op.target_columns[0]
        new = str(op.params["new_name"])
        table.require(old)
        if new in table.values:
            raise SchemaError(f"rename target {new!r} already exists")
        table.names[table.names.index(old)] = new
        table.values[new] = table.values.pop(old)
        return
    if op.kind == "duplicate_rows":
        rows = _sample_rows(n, op.row_fraction, seed, op_index, 0)
        for name in table.names:
            col = table.values[name]
            col.extend(col[i] for i in rows)
        table.row_count += len(rows)
        return
    if op.kind == "shuffle_column_order":
        rng = _rng(seed, op_index)
        order = [int(i) for i in rng.permutation(len(table.names))]
        table.names = [table.names[i] for i in order]
        return
    if op.kind == "break_conditional_dependency":
        cond_col = table.require(str(op.params["condition_column"]))
        cond_value = op.params["condition_value"]
        matches = [i for i in range(n) if cond_col[i] == cond_value]
        k = int(op.row_fraction * len(matches))
        if k <= 0:
            return
        rng = _rng(seed, op_index)
        picked = sorted(int(i) for i in rng.choice(len(matches), size=k, replace=False))
        rows = [matches[i] for i in picked]
        mode = op.params.get("mode", "null")
        for col_name in op.target_columns:
            col = table.require(col_name)
            for i in rows:
                col[i] = None if mode == "null" else op.params.get("value")
        return

    # remaining kinds corrupt sampled cells per target column
    for lane, col_name in enumerate(op.target_columns):
        col = table.require(col_name)
        rows = _sample_rows(n, op.row_fraction, seed, op_index, lane)
        if op.kind == "inject_nulls":
            for i in rows:
                col[i] = None
        elif op.kind == "duplicate_key_values":
            if not rows:
                continue
            rng = _rng(seed, op_index, lane + 100)
            sources = [int(i) for i in rng.integers(0, n, size=len(rows))]
            for i, src in zip(rows, sources):
                col[i] = col[src]
        elif op.kind == "out_of_domain_category":
            value = op.params["value"]
            kinds = {kind_of(v) for v in col if v is not None}
            if kinds and kind_of(value) not in kinds:
                raise ConfigError(
                    f"out_of_domain_category value {value!r} does not match column {col_name!r}"
                )
            for i in rows:
                col[i] = value
        elif op.kind == "scale_values":
            factor = op.params.get("factor", 10.0)
            keep_int = _is_int_column(col) and isinstance(factor, int)
            if not keep_int:
                for i in range(n):
                    if col[i] is not None:
                        col[i] = float(col[i])
            for i in rows:
                if col[i] is not None:
                    col[i] = col[i] * factor
        elif op.kind == "inject_outliers":
            stats = _numeric_stats(col)
            if stats is None:
                continue
            mean, std = stats
            magnitude = float(op.params.get("magnitude", 1000.0))
            outlier = mean + magnitude * max(std, 1.0)
            is_int = _is_int_column(col)
            for i in rows:
                col[i] = int(round(outlier)) if is_int else float(outlier)
        elif op.kind == "negate_values":
            for i in rows:
                if col[i] is not None:
                    col[i] = -col[i]
        elif op.kind == "constant_collapse":
            stats = _numeric_stats(col)
            if stats is None:
                continue
            mean = stats[0]
            constant: Value = int(round(mean)) if _is_int_column(col) else mean
            for i in range(n):
                col[i] = constant
        elif op.kind == "case_flip":
            for i in rows:
                if isinstance(col[i], str):
                    col[i] = col[i].swapcase()
        elif op.kind == "whitespace_padding":
            pad = str(op.params.get("pad", " "))
            for i in rows:
                if isinstance(col[i], str):
                    col[i] = pad + col[i] + pad
        elif op.kind == "truncate_strings":
            max_chars = int(op.params.get("max_chars", 3))
            for i in rows:
                if isinstance(col[i], str):
                    col[i] = col[i][:max_chars]
        elif op.kind == "unicode_confusables":
            for i in rows:
                if isinstance(col[i], str):
                    col[i] = col[i].translate(_CONFUSABLES)
        elif op.kind == "numeric_to_string_locale":
            converted = _as_text_column(col)
            for i in rows:
                if col[i] is not None:
                    text = f"{float(col[i]):,.2f}"  # 1,234.50
                    converted[i] = text.replace(",", "\x00").replace(".", ",").replace("\x00", ".")
            table.values[col_name] = converted
        elif op.kind == "date_format_shift":
            from_fmt = str(op.params.get("from_format", "%Y-%m-%d"))
            to_fmt = str(op.params.get("to_format", "%d/%m/%Y"))
            for i in rows:
                if isinstance(col[i], str):
                    try:
                        col[i] = datetime.strptime(col[i], from_fmt).strftime(to_fmt)
                    except ValueError:
                        pass
        elif op.kind == "boolean_encoding_shift":
            true_text = str(op.params.get("true_text", "yes"))
            false_text = str(op.params.get("false_text", "no"))
            converted = _as_text_column(col)
            for i in rows:
                if col[i] is not None:
                    converted[i] = true_text if col[i] else false_text
            table.values[col_name] = converted
        else:
            raise ConfigError(f"unhandled operator kind {op.kind!r}")


def apply_config(d: Dataset, cfg: ErrorConfig) -> Dataset:
    """Apply the config's operators in order; deterministic in (d, cfg)."""
    problems = validate_config(cfg, d.column_names)
    if problems:
        raise ConfigError("; ".join(problems))
    table = _Table(d)
    for idx, op in enumerate(cfg.operators):
        _apply_operator(table, op, idx, cfg.seed)
    return table.to_dataset()


def make_batch(d: Dataset, cfg: ErrorConfig) -> Batch:
    return Batch(id=cfg.id, data=apply_config(d, cfg), provenance=cfg.id)
