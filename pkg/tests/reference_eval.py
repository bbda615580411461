"""Naive row-by-row reference evaluator.

Written independently of taskdv.dsl.evaluate: rows are materialized as
dicts and each verb is computed with the most literal possible loop. Only
statuses and measured values are meant to coincide with the production
evaluator; the implementations share nothing but the AST and the documented
semantics (two-valued comparisons over nulls, vacuous pass on an empty
filtered set, anchored patterns, population standard deviation).
"""

from __future__ import annotations

import math
import re

from taskdv.dsl.ast import And, Comparison, Constraint, Not, NullTest, Or
from taskdv.tabular import Dataset, ValueKind

NUMERIC_KINDS = (ValueKind.INTEGER, ValueKind.REAL)


class RefError(Exception):
    pass


def _rows(d: Dataset) -> list[dict]:
    return [
        {col.name: col.values[i] for col in d.columns} for i in range(d.row_count)
    ]


def _expr_columns(expr) -> set[str]:
    if isinstance(expr, (Comparison, NullTest)):
        return {expr.column}
    if isinstance(expr, (And, Or)):
        return _expr_columns(expr.left) | _expr_columns(expr.right)
    if isinstance(expr, Not):
        return _expr_columns(expr.operand)
    raise TypeError(expr)


def _check_types(expr, d: Dataset) -> None:
    if isinstance(expr, (And, Or)):
        _check_types(expr.left, d)
        _check_types(expr.right, d)
    elif isinstance(expr, Not):
        _check_types(expr.operand, d)
    elif isinstance(expr, Comparison):
        kind = d.column(expr.column).inferred_type
        lit = expr.literal
        if kind in NUMERIC_KINDS:
            if isinstance(lit, bool) or not isinstance(lit, (int, float)):
                raise RefError("type")
        elif kind is ValueKind.TEXT:
            if not isinstance(lit, str):
                raise RefError("type")
        else:
            if not isinstance(lit, bool) or expr.op not in ("==", "!="):
                raise RefError("type")


def _expr_true(expr, row: dict) -> bool:
    if isinstance(expr, And):
        return _expr_true(expr.left, row) and _expr_true(expr.right, row)
    if isinstance(expr, Or):
        return _expr_true(expr.left, row) or _expr_true(expr.right, row)
    if isinstance(expr, Not):
        return not _expr_true(expr.operand, row)
    if isinstance(expr, NullTest):
        missing = row[expr.column] is None
        return (not missing) if expr.negated else missing
    value = row[expr.column]
    if value is None:
        return False
    lit = expr.literal
    ops = {
        "==": lambda a, b: a == b,
        "!=": lambda a, b: a != b,
        ">": lambda a, b: a > b,
        ">=": lambda a, b: a >= b,
        "<": lambda a, b: a < b,
        "<=": lambda a, b: a <= b,
    }
    return ops[expr.op](value, lit)


def _distinct(values) -> int:
    return len({(type(v).__name__, v) for v in values})


def reference_evaluate(c: Constraint, d: Dataset) -> tuple[str, float | None]:
    """(status, measured) per the documented constraint semantics."""
    referenced = list(c.columns)
    if c.where is not None:
        referenced += sorted(_expr_columns(c.where))
    if c.row_expr is not None:
        referenced += sorted(_expr_columns(c.row_expr))
    for name in referenced:
        if not d.has_column(name):
            return "error", None
    try:
        if c.where is not None:
            _check_types(c.where, d)
        if c.row_expr is not None:
            _check_types(c.row_expr, d)
    except RefError:
        return "error", None

    rows = _rows(d)
    if c.where is not None:
        rows = [row for row in rows if _expr_true(c.where, row)]

    if c.verb == "hasSize":
        measured: float | None = float(len(rows))
    elif not rows:
        measured = None
    elif c.verb in ("hasCompleteness", "isComplete"):
        measured = sum(1 for row in rows if row[c.columns[0]] is not None) / len(rows)
    elif c.verb == "isUnique":
        values = [row[c.columns[0]] for row in rows if row[c.columns[0]] is not None]
        measured = _distinct(values) / len(values) if values else None
    elif c.verb in ("hasMin", "hasMax", "hasMean", "hasStandardDeviation"):
        if d.column(c.columns[0]).inferred_type not in NUMERIC_KINDS:
            return "error", None
        values = [float(row[c.columns[0]]) for row in rows if row[c.columns[0]] is not None]
        if not values:
            measured = None
        elif c.verb == "hasMin":
            measured = min(values)
        elif c.verb == "hasMax":
            measured = max(values)
        else:
            mean = sum(values) / len(values)
            if c.verb == "hasMean":
                measured = mean
            else:
                measured = math.sqrt(sum((v - mean) ** 2 for v in values) / len(values))
    elif c.verb == "hasApproxCountDistinct":
        values = [row[c.columns[0]] for row in rows if row[c.columns[0]] is not None]
        measured = float(_distinct(values))
    elif c.verb == "hasApproxQuantile":
        if d.column(c.columns[0]).inferred_type not in NUMERIC_KINDS:
            return "error", None
        values = sorted(
            float(row[c.columns[0]]) for row in rows if row[c.columns[0]] is not None
        )
        if not values:
            measured = None
        else:
            measured = values[math.floor(c.quantile * (len(values) - 1))]
    elif c.verb == "isContainedIn":
        values = [row[c.columns[0]] for row in rows if row[c.columns[0]] is not None]
        if not values:
            measured = None
        else:
            measured = sum(1 for v in values if any(v == s for s in c.value_set)) / len(values)
    elif c.verb == "hasPattern":
        if d.column(c.columns[0]).inferred_type is not ValueKind.TEXT:
            return "error", None
        try:
            regex = re.compile(c.pattern)
        except re.error:
            return "error", None
        values = [row[c.columns[0]] for row in rows if row[c.columns[0]] is not None]
        if not values:
            measured = None
        else:
            measured = sum(1 for v in values if regex.fullmatch(v)) / len(values)
    elif c.verb == "satisfies":
        measured = sum(1 for row in rows if _expr_true(c.row_expr, row)) / len(rows)
    else:
        raise AssertionError(c.verb)

    if measured is None:
        return "pass", None
    if c.verb in ("isComplete", "isUnique"):
        ok = measured == 1.0
    else:
        ok = c.predicate.check(measured)
    return ("pass" if ok else "fail"), measured
