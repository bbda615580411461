"""Descriptive-statistics profiles of datasets.

Completeness, mean, stddev, min, and max are exact full-scan statistics;
distinct counts and quantiles go through the mergeable sketches. Profiling a
dataset twice with the same parameters and sketch seed yields identical
profiles.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .errors import DomainError
from .sketches import DEFAULT_SKETCH_SEED, HyperLogLog, KllSketch
from .tabular import ColumnVector, Dataset, Value, ValueKind, _render_cell

DEFAULT_HISTOGRAM_THRESHOLD = 50
MAX_SAMPLE_VALUES = 5


@dataclass(frozen=True)
class ColumnProfile:
    name: str
    inferred_type: ValueKind
    completeness: float
    approx_distinct: float
    non_null_count: int = 0
    histogram: dict[Value, int] | None = None
    mean: float | None = None
    stddev: float | None = None
    min: float | None = None
    max: float | None = None
    sample_values: tuple[Value, ...] = ()


def approx_distinct(col: ColumnVector, seed: int = DEFAULT_SKETCH_SEED, p: int = 14) -> float:
    """Approximate distinct count of the non-null values."""
    sketch = HyperLogLog(p=p, seed=seed)
    sketch.add_all(col.non_null_values())
    return sketch.estimate()


def approx_quantile(
    col: ColumnVector, q: float, eps: float = 0.01, seed: int = DEFAULT_SKETCH_SEED
) -> float:
    """Approximate q-quantile of a numeric column (rank error at most eps*n)."""
    if not col.is_numeric():
        raise DomainError(f"column {col.name} is not numeric")
    values = [float(v) for v in col.non_null_values()]
    if not values:
        raise DomainError(f"column {col.name} has no non-null values")
    if not 0.0 <= q <= 1.0:
        raise DomainError("q must be in [0, 1]")
    sketch = KllSketch(eps=eps, seed=seed)
    sketch.extend(values)
    return sketch.query(q)


def _profile_column(
    col: ColumnVector, row_count: int, histogram_threshold: int, seed: int
) -> ColumnProfile:
    non_null = col.non_null_values()
    completeness = 1.0 if row_count == 0 else len(non_null) / row_count

    counts: dict[Value, int] = {}
    sample: list[Value] = []
    for v in non_null:
        counts[v] = counts.get(v, 0) + 1
        if len(sample) < MAX_SAMPLE_VALUES and v not in sample:
            sample.append(v)
    histogram = dict(counts) if 0 < len(counts) <= histogram_threshold else None

    mean = stddev = vmin = vmax = None
    if col.is_numeric() and non_null:
        nums = [float(v) for v in non_null]
        mean = sum(nums) / len(nums)
        stddev = math.sqrt(sum((v - mean) ** 2 for v in nums) / len(nums))
        vmin = min(nums)
        vmax = max(nums)

    return ColumnProfile(
        name=col.name,
        inferred_type=col.inferred_type,
        completeness=completeness,
        approx_distinct=approx_distinct(col, seed=seed),
        non_null_count=len(non_null),
        histogram=histogram,
        mean=mean,
        stddev=stddev,
        min=vmin,
        max=vmax,
        sample_values=tuple(sample),
    )


def profile_data(
    d: Dataset,
    histogram_threshold: int = DEFAULT_HISTOGRAM_THRESHOLD,
    sketch_seed: int = DEFAULT_SKETCH_SEED,
) -> list[ColumnProfile]:
    """One profile per column; deterministic for a fixed sketch seed."""
    return [
        _profile_column(c, d.row_count, histogram_threshold, sketch_seed) for c in d.columns
    ]


# ---------------------------------------------------------------------------
# Profile artifact: JSON with floats carrying 17 significant digits
# ---------------------------------------------------------------------------

def _token(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isinf(value) or math.isnan(value):
            return json.dumps(str(value))
        return format(value, ".17g")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, dict):
        inner = ", ".join(f"{json.dumps(str(k), ensure_ascii=False)}: {_token(v)}" for k, v in value.items())
        return "{" + inner + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_token(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {value!r}")


def _profile_payload(p: ColumnProfile) -> list[tuple[str, object]]:
    histogram = None
    if p.histogram is not None:
        histogram = {_render_cell(k): v for k, v in sorted(p.histogram.items(), key=lambda kv: _render_cell(kv[0]))}
    return [
        ("name", p.name),
        ("inferred_type", p.inferred_type.value),
        ("completeness", p.completeness),
        ("approx_distinct", p.approx_distinct),
        ("non_null_count", p.non_null_count),
        ("histogram", histogram),
        ("mean", p.mean),
        ("stddev", p.stddev),
        ("min", p.min),
        ("max", p.max),
        ("sample_values", [_render_cell(v) for v in p.sample_values]),
    ]


def render_profiles(
    profiles: Sequence[ColumnProfile],
    histogram_threshold: int = DEFAULT_HISTOGRAM_THRESHOLD,
    sketch_seed: int = DEFAULT_SKETCH_SEED,
) -> str:
    columns = []
    for p in profiles:
        fields = ",\n      ".join(f"{json.dumps(k)}: {_token(v)}" for k, v in _profile_payload(p))
        columns.append("    {\n      " + fields + "\n    }")
    body = ",\n".join(columns)
    return (
        "{\n"
        f'  "sketch_seed": {sketch_seed},\n'
        f'  "histogram_threshold": {histogram_threshold},\n'
        '  "columns": [\n' + body + "\n  ]\n}\n"
    )


def write_profiles(
    profiles: Sequence[ColumnProfile],
    path: str | Path,
    histogram_threshold: int = DEFAULT_HISTOGRAM_THRESHOLD,
    sketch_seed: int = DEFAULT_SKETCH_SEED,
) -> None:
    Path(path).write_text(
        render_profiles(profiles, histogram_threshold, sketch_seed), encoding="utf-8"
    )
