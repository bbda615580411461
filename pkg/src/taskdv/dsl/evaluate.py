"""Constraint and test evaluation against datasets.

Filter expressions use two-valued logic: a comparison whose cell is null is
false (null tests are the only way to observe nulls). Verbs that measure a
statistic of values evaluate vacuously to pass when the filtered row set, or
the set of non-null values the statistic needs, is empty.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from ..sketches import DEFAULT_SKETCH_SEED, HyperLogLog, KllSketch
from ..tabular import Dataset, Value, ValueKind, take_rows
from .ast import (
    And,
    Comparison,
    Constraint,
    ConstraintOutcome,
    DataUnitTest,
    FilterExpr,
    Not,
    NullTest,
    Or,
    TestReport,
    columns_of_expr,
)

_NUMERIC = (ValueKind.INTEGER, ValueKind.REAL)


class _EvalError(Exception):
    def __init__(self, kind: str, detail: str):
        self.kind = kind  # schema | type | pattern
        self.detail = detail
        super().__init__(f"{kind}: {detail}")


def _check_expr_types(expr: FilterExpr, d: Dataset) -> None:
    if isinstance(expr, (And, Or)):
        _check_expr_types(expr.left, d)
        _check_expr_types(expr.right, d)
        return
    if isinstance(expr, Not):
        _check_expr_types(expr.operand, d)
        return
    if isinstance(expr, NullTest):
        return
    assert isinstance(expr, Comparison)
    kind = d.column(expr.column).inferred_type
    lit = expr.literal
    if kind in _NUMERIC:
        if isinstance(lit, bool) or not isinstance(lit, (int, float)):
            raise _EvalError("type", f"numeric column {expr.column} compared to {lit!r}")
    elif kind is ValueKind.TEXT:
        if not isinstance(lit, str):
            raise _EvalError("type", f"text column {expr.column} compared to {lit!r}")
    else:  # boolean
        if not isinstance(lit, bool):
            raise _EvalError("type", f"boolean column {expr.column} compared to {lit!r}")
        if expr.op not in ("==", "!="):
            raise _EvalError("type", f"ordering comparison on boolean column {expr.column}")


def _eval_expr(expr: FilterExpr, row: dict[str, Value]) -> bool:
    if isinstance(expr, And):
        return _eval_expr(expr.left, row) and _eval_expr(expr.right, row)
    if isinstance(expr, Or):
        return _eval_expr(expr.left, row) or _eval_expr(expr.right, row)
    if isinstance(expr, Not):
        return not _eval_expr(expr.operand, row)
    if isinstance(expr, NullTest):
        is_null = row[expr.column] is None
        return not is_null if expr.negated else is_null
    assert isinstance(expr, Comparison)
    v = row[expr.column]
    if v is None:
        return False
    lit = expr.literal
    if expr.op == "==":
        return v == lit
    if expr.op == "!=":
        return v != lit
    if expr.op == ">":
        return v > lit
    if expr.op == ">=":
        return v >= lit
    if expr.op == "<":
        return v < lit
    if expr.op == "<=":
        return v <= lit
    raise ValueError(f"unknown operator {expr.op}")


def filter_indices(d: Dataset, expr: FilterExpr | None) -> list[int]:
    if expr is None:
        return list(range(d.row_count))
    return [i for i in range(d.row_count) if _eval_expr(expr, d.row(i))]


def filter_rows(d: Dataset, expr: FilterExpr | None) -> Dataset:
    return take_rows(d, filter_indices(d, expr))


def _referenced_columns(c: Constraint) -> list[str]:
    refs = list(c.columns)
    if c.where is not None:
        refs.extend(sorted(columns_of_expr(c.where)))
    if c.row_expr is not None:
        refs.extend(sorted(columns_of_expr(c.row_expr)))
    seen: list[str] = []
    for r in refs:
        if r not in seen:
            seen.append(r)
    return seen


def _numeric_values(d: Dataset, column: str, indices: list[int]) -> list[float]:
    col = d.column(column)
    if col.inferred_type not in _NUMERIC:
        raise _EvalError("type", f"{column} is not numeric")
    return [float(col.values[i]) for i in indices if not col.null_mask[i]]


def _cell_values(d: Dataset, column: str, indices: list[int]) -> list[Value]:
    col = d.column(column)
    return [col.values[i] for i in indices if not col.null_mask[i]]


def _vacuous(c: Constraint) -> ConstraintOutcome:
    return ConstraintOutcome(c.id, "pass", None, "vacuous: no rows to measure")


def _measure(c: Constraint, d: Dataset, indices: list[int], sketch_seed: int) -> float | None:
    """The constraint's statistic over the filtered rows; None means vacuous."""
    if c.verb == "hasSize":
        return float(len(indices))
    if not indices:
        return None
    if c.verb in ("hasCompleteness", "isComplete"):
        col = d.column(c.columns[0])
        non_null = sum(1 for i in indices if not col.null_mask[i])
        return non_null / len(indices)
    if c.verb == "isUnique":
        values = _cell_values(d, c.columns[0], indices)
        if not values:
            return None
        distinct = len({_distinct_key(v) for v in values})
        return distinct / len(values)
    if c.verb in ("hasMin", "hasMax", "hasMean", "hasStandardDeviation"):
        nums = _numeric_values(d, c.columns[0], indices)
        if not nums:
            return None
        if c.verb == "hasMin":
            return min(nums)
        if c.verb == "hasMax":
            return max(nums)
        mean = sum(nums) / len(nums)
        if c.verb == "hasMean":
            return mean
        return math.sqrt(sum((v - mean) ** 2 for v in nums) / len(nums))
    if c.verb == "hasApproxCountDistinct":
        values = _cell_values(d, c.columns[0], indices)
        sketch = HyperLogLog(seed=sketch_seed)
        sketch.add_all(values)
        return sketch.estimate()
    if c.verb == "hasApproxQuantile":
        nums = _numeric_values(d, c.columns[0], indices)
        if not nums:
            return None
        sketch = KllSketch(seed=sketch_seed)
        sketch.extend(nums)
        return sketch.query(c.quantile)
    if c.verb == "isContainedIn":
        values = _cell_values(d, c.columns[0], indices)
        if not values:
            return None
        inside = sum(1 for v in values if any(v == s for s in c.value_set))
        return inside / len(values)
    if c.verb == "hasPattern":
        col = d.column(c.columns[0])
        if col.inferred_type is not ValueKind.TEXT:
            raise _EvalError("type", f"{c.columns[0]} is not a text column")
        try:
            regex = re.compile(c.pattern)
        except re.error as exc:
            raise _EvalError("pattern", str(exc))
        values = [v for v in _cell_values(d, c.columns[0], indices)]
        if not values:
            return None
        matched = sum(1 for v in values if regex.fullmatch(v) is not None)
        return matched / len(values)
    if c.verb == "satisfies":
        hits = sum(1 for i in indices if _eval_expr(c.row_expr, d.row(i)))
        return hits / len(indices)
    raise ValueError(f"unknown verb {c.verb}")


def _distinct_key(v: Value):
    # bool is an int subclass; keep True distinct from 1 in uniqueness counts
    return (type(v).__name__, v)


def evaluate_constraint(
    c: Constraint, d: Dataset, sketch_seed: int = DEFAULT_SKETCH_SEED
) -> ConstraintOutcome:
    try:
        for name in _referenced_columns(c):
            if not d.has_column(name):
                raise _EvalError("schema", f"unknown column {name!r}")
        if c.where is not None:
            _check_expr_types(c.where, d)
        if c.row_expr is not None:
            _check_expr_types(c.row_expr, d)
        indices = filter_indices(d, c.where)
        measured = _measure(c, d, indices, sketch_seed)
    except _EvalError as exc:
        return ConstraintOutcome(c.id, "error", None, str(exc))
    if measured is None:
        return _vacuous(c)
    if c.verb in ("isComplete", "isUnique"):
        ok = measured == 1.0
    else:
        ok = c.predicate.check(measured)
    status = "pass" if ok else "fail"
    return ConstraintOutcome(c.id, status, measured, "")


def evaluate_test(
    t: DataUnitTest,
    d: Dataset,
    batch_id: str = "",
    sketch_seed: int = DEFAULT_SKETCH_SEED,
) -> TestReport:
    """Evaluate every constraint (no short-circuit); reject iff any fails.

    Error-status outcomes are surfaced in the report but do not reject: an
    invalid constraint signals an engineering bug, not bad data.
    """
    outcomes = tuple(evaluate_constraint(c, d, sketch_seed) for c in t.constraints)
    verdict = "reject" if any(o.status == "fail" for o in outcomes) else "pass"
    return TestReport(test_id=t.id, batch_id=batch_id, outcomes=outcomes, verdict=verdict)


@dataclass(frozen=True)
class PrecheckResult:
    accepted: bool
    reason: str | None = None


def precheck_constraint(c: Constraint, sample: Dataset) -> PrecheckResult:
    """Discard constraints that error out or fail on the trusted sample."""
    outcome = evaluate_constraint(c, sample)
    if outcome.status == "error":
        kind = outcome.message.split(":", 1)[0]
        return PrecheckResult(False, kind)
    if outcome.status == "fail":
        return PrecheckResult(False, "fails_on_sample")
    return PrecheckResult(True)
