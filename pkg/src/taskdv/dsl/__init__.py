"""Declarative data unit test DSL: AST, parser, renderer, evaluator."""

from .ast import (
    And,
    Between,
    Compare,
    Comparison,
    Constraint,
    ConstraintOutcome,
    DataUnitTest,
    FilterExpr,
    InSet,
    Not,
    NullTest,
    Or,
    Predicate,
    TestReport,
    VERBS,
    columns_of_expr,
    make_test,
)
from .evaluate import (
    PrecheckResult,
    evaluate_constraint,
    evaluate_test,
    filter_rows,
    precheck_constraint,
)
from .io import load_test, render_test_json, save_test
from .parser import parse_constraint, parse_filter
from .render import render_constraint, render_expr, render_predicate

__all__ = [
    "And",
    "Between",
    "Compare",
    "Comparison",
    "Constraint",
    "ConstraintOutcome",
    "DataUnitTest",
    "FilterExpr",
    "InSet",
    "Not",
    "NullTest",
    "Or",
    "Predicate",
    "PrecheckResult",
    "TestReport",
    "VERBS",
    "columns_of_expr",
    "evaluate_constraint",
    "evaluate_test",
    "filter_rows",
    "load_test",
    "make_test",
    "parse_constraint",
    "parse_filter",
    "precheck_constraint",
    "render_constraint",
    "render_expr",
    "render_predicate",
    "render_test_json",
    "save_test",
]
