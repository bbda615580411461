"""Seeded random datasets, filter expressions, and constraints for the
oracle-equivalence and round-trip suites."""

from __future__ import annotations

import random

from taskdv.dsl.ast import (
    And,
    Between,
    Compare,
    Comparison,
    Constraint,
    InSet,
    Not,
    NullTest,
    Or,
    columns_of_expr,
)
from taskdv.tabular import ColumnVector, Dataset, ValueKind

COLUMN_POOL = ["alpha", "beta", "gamma", "delta", "eps", "zeta"]
TEXT_POOL = ["A", "B", "C", "COMPLETED", "x1", "hello world", "über", ""]
PATTERN_POOL = ["[A-Z]+", "[a-z0-9 ]*", "A.*", "x[12]", "C\\w+", "(unclosed"]


def random_dataset(rng: random.Random, max_rows: int = 50, max_cols: int = 6) -> Dataset:
    n_cols = rng.randint(1, max_cols)
    n_rows = rng.randint(0, max_rows)
    columns = []
    for name in COLUMN_POOL[:n_cols]:
        kind = rng.choice(list(ValueKind))
        values = []
        for _ in range(n_rows):
            if rng.random() < 0.15:
                values.append(None)
            elif kind is ValueKind.INTEGER:
                values.append(rng.randint(-20, 20))
            elif kind is ValueKind.REAL:
                values.append(round(rng.uniform(-100.0, 100.0), 3))
            elif kind is ValueKind.BOOLEAN:
                values.append(rng.random() < 0.5)
            else:
                values.append(rng.choice(TEXT_POOL))
        mask = tuple(v is None for v in values)
        columns.append(ColumnVector(name, kind, tuple(values), mask))
    return Dataset(tuple(columns), row_count=n_rows)


def _literal_for(rng: random.Random, kind: ValueKind, well_typed: bool):
    if not well_typed:
        # deliberately mismatched literal to exercise the type-error path
        if kind in (ValueKind.INTEGER, ValueKind.REAL):
            return rng.choice(["oops", True])
        return rng.choice([3, 2.5])
    if kind is ValueKind.INTEGER:
        return rng.randint(-20, 20)
    if kind is ValueKind.REAL:
        return round(rng.uniform(-100.0, 100.0), 3)
    if kind is ValueKind.BOOLEAN:
        return rng.random() < 0.5
    return rng.choice(TEXT_POOL)


def random_filter(rng: random.Random, d: Dataset, depth: int = 2, well_typed: bool = True):
    if depth > 0 and rng.random() < 0.5:
        op = rng.choice(["and", "or", "not"])
        if op == "not":
            return Not(random_filter(rng, d, depth - 1, well_typed))
        left = random_filter(rng, d, depth - 1, well_typed)
        right = random_filter(rng, d, depth - 1, well_typed)
        return And(left, right) if op == "and" else Or(left, right)
    column = rng.choice(d.columns)
    if rng.random() < 0.3:
        return NullTest(column.name, negated=rng.random() < 0.5)
    kind = column.inferred_type
    if well_typed and kind is ValueKind.BOOLEAN:
        op = rng.choice(["==", "!="])
    else:
        op = rng.choice(["==", "!=", ">", ">=", "<", "<="])
    return Comparison(column.name, op, _literal_for(rng, kind, well_typed))


def random_predicate(rng: random.Random):
    roll = rng.random()
    if roll < 0.6:
        return Compare(rng.choice([">=", "<=", "==", ">", "<"]), round(rng.uniform(-5.0, 5.0), 2))
    if roll < 0.85:
        lo = round(rng.uniform(-5.0, 2.0), 2)
        return Between(lo, lo + round(rng.uniform(0.0, 5.0), 2))
    return InSet(tuple(round(rng.uniform(-3.0, 3.0), 2) for _ in range(rng.randint(1, 3))))


def random_constraint(rng: random.Random, d: Dataset, well_typed_filters: bool = True) -> Constraint:
    verb = rng.choice(
        [
            "hasCompleteness",
            "isComplete",
            "isUnique",
            "hasMin",
            "hasMax",
            "hasMean",
            "hasStandardDeviation",
            "hasApproxCountDistinct",
            "hasApproxQuantile",
            "isContainedIn",
            "hasPattern",
            "hasSize",
            "satisfies",
        ]
    )
    if rng.random() < 0.08:
        column = "ghost"  # unknown column exercises the schema-error path
    else:
        column = rng.choice(d.columns).name
    where = None
    if rng.random() < 0.4:
        where = random_filter(rng, d, well_typed=well_typed_filters)
    kwargs: dict = {"verb": verb, "columns": (column,), "where": where}
    if verb in ("isComplete", "isUnique"):
        pass
    elif verb == "hasApproxQuantile":
        kwargs["predicate"] = random_predicate(rng)
        kwargs["quantile"] = rng.choice([0.0, 0.25, 0.5, 0.9, 1.0])
    elif verb == "isContainedIn":
        kwargs["predicate"] = rng.choice([Compare("==", 1.0), Compare(">=", 0.5)])
        kind = d.column(column).inferred_type if d.has_column(column) else ValueKind.TEXT
        kwargs["value_set"] = tuple(
            _literal_for(rng, kind, True) for _ in range(rng.randint(1, 4))
        )
    elif verb == "hasPattern":
        kwargs["predicate"] = rng.choice([Compare("==", 1.0), Compare(">=", 0.25)])
        kwargs["pattern"] = rng.choice(PATTERN_POOL)
    elif verb == "hasSize":
        kwargs["columns"] = ()
        kwargs["predicate"] = Compare(rng.choice([">=", "<="]), float(rng.randint(0, 40)))
    elif verb == "satisfies":
        expr = random_filter(rng, d, well_typed=well_typed_filters)
        kwargs["row_expr"] = expr
        kwargs["columns"] = tuple(sorted(columns_of_expr(expr)))
        kwargs["predicate"] = rng.choice([Compare(">=", 1.0), Compare(">=", 0.5), Compare("==", 1.0)])
    else:
        kwargs["predicate"] = random_predicate(rng)
    return Constraint(**kwargs)
