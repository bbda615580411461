"""AST node types for the constraint DSL.

Constraint identity (id, assumption links) is excluded from structural
equality so that parse(render(c)) == c holds for the semantic content.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Union

from ..tabular import Value

# ---------------------------------------------------------------------------
# Predicates over a measured statistic
# ---------------------------------------------------------------------------

COMPARATORS = (">=", "<=", "==", ">", "<")


@dataclass(frozen=True)
class Compare:
    op: str  # one of COMPARATORS
    threshold: float

    def check(self, measured: float) -> bool:
        if self.op == ">=":
            return measured >= self.threshold
        if self.op == "<=":
            return measured <= self.threshold
        if self.op == "==":
            return measured == self.threshold
        if self.op == ">":
            return measured > self.threshold
        if self.op == "<":
            return measured < self.threshold
        raise ValueError(f"unknown comparator {self.op}")


@dataclass(frozen=True)
class Between:
    lo: float
    hi: float

    def check(self, measured: float) -> bool:
        return self.lo <= measured <= self.hi


@dataclass(frozen=True)
class InSet:
    values: tuple[Value, ...]

    def check(self, measured: float) -> bool:
        return any(measured == v for v in self.values)


Predicate = Union[Compare, Between, InSet]


# ---------------------------------------------------------------------------
# Row-scoped filter expressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Comparison:
    column: str
    op: str  # == != > >= < <=
    literal: Value


@dataclass(frozen=True)
class NullTest:
    column: str
    negated: bool  # True renders as "is not null"


@dataclass(frozen=True)
class And:
    left: "FilterExpr"
    right: "FilterExpr"


@dataclass(frozen=True)
class Or:
    left: "FilterExpr"
    right: "FilterExpr"


@dataclass(frozen=True)
class Not:
    operand: "FilterExpr"


FilterExpr = Union[Comparison, NullTest, And, Or, Not]


def columns_of_expr(expr: FilterExpr) -> set[str]:
    if isinstance(expr, Comparison):
        return {expr.column}
    if isinstance(expr, NullTest):
        return {expr.column}
    if isinstance(expr, (And, Or)):
        return columns_of_expr(expr.left) | columns_of_expr(expr.right)
    if isinstance(expr, Not):
        return columns_of_expr(expr.operand)
    raise TypeError(f"not a filter expression: {expr!r}")


# ---------------------------------------------------------------------------
# Constraints and tests
# ---------------------------------------------------------------------------

VERBS = (
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
)

_NO_PREDICATE_VERBS = ("isComplete", "isUnique")


@dataclass(frozen=True)
class Constraint:
    verb: str
    columns: tuple[str, ...]
    predicate: Predicate | None = None
    where: FilterExpr | None = None
    quantile: float | None = None  # hasApproxQuantile only
    value_set: tuple[Value, ...] | None = None  # isContainedIn only
    pattern: str | None = None  # hasPattern only
    row_expr: FilterExpr | None = None  # satisfies only
    expr_name: str | None = None  # satisfies only
    id: str = field(default="", compare=False)
    assumption_ids: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.verb not in VERBS:
            raise ValueError(f"unknown verb {self.verb}")
        if self.verb == "hasSize":
            if self.columns:
                raise ValueError("hasSize takes no target column")
        elif self.verb == "satisfies":
            if len(self.columns) < 1:
                raise ValueError("satisfies requires at least one column")
        elif len(self.columns) != 1:
            raise ValueError(f"{self.verb} targets exactly one column")
        if self.predicate is None and self.verb not in _NO_PREDICATE_VERBS:
            raise ValueError(f"{self.verb} requires a predicate")
        if isinstance(self.predicate, Between) and self.predicate.lo > self.predicate.hi:
            raise ValueError("between requires lo <= hi")
        if isinstance(self.predicate, InSet) and not self.predicate.values:
            raise ValueError("in-set predicate must be non-empty")
        if self.value_set is not None and not self.value_set:
            raise ValueError("isContainedIn value set must be non-empty")

    def with_id(self, id: str, assumption_ids: tuple[str, ...] = ()) -> "Constraint":
        return replace(self, id=id, assumption_ids=assumption_ids)


@dataclass(frozen=True)
class DataUnitTest:
    id: str
    task_id: str
    constraints: tuple[Constraint, ...]

    def __post_init__(self):
        ids = [c.id for c in self.constraints]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate constraint ids in test {self.id}")

    def constraint(self, constraint_id: str) -> Constraint:
        for c in self.constraints:
            if c.id == constraint_id:
                return c
        raise KeyError(f"no constraint {constraint_id!r} in test {self.id}")


def make_test(id: str, task_id: str, constraints: list[Constraint]) -> DataUnitTest:
    """Assemble a test, assigning c1..cN ids to constraints that lack one."""
    numbered = []
    for i, c in enumerate(constraints, start=1):
        numbered.append(c if c.id else replace(c, id=f"c{i}"))
    return DataUnitTest(id=id, task_id=task_id, constraints=tuple(numbered))


# ---------------------------------------------------------------------------
# Evaluation results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstraintOutcome:
    constraint_id: str
    status: str  # pass | fail | error
    measured: float | None
    message: str = ""

    def __post_init__(self):
        if self.status not in ("pass", "fail", "error"):
            raise ValueError(f"bad status {self.status}")
        if self.status == "error" and self.measured is not None:
            raise ValueError("error outcomes carry no measurement")


@dataclass(frozen=True)
class TestReport:
    test_id: str
    batch_id: str
    outcomes: tuple[ConstraintOutcome, ...]
    verdict: str  # pass | reject

    def outcome(self, constraint_id: str) -> ConstraintOutcome:
        for o in self.outcomes:
            if o.constraint_id == constraint_id:
                return o
        raise KeyError(f"no outcome for constraint {constraint_id!r}")
