"""Canonical text rendering of constraint ASTs; parse(render(c)) == c."""

from __future__ import annotations

import json

from ..tabular import Value
from .ast import (
    And,
    Between,
    Compare,
    Comparison,
    Constraint,
    FilterExpr,
    InSet,
    Not,
    NullTest,
    Or,
    Predicate,
)


def _render_number(x: float | int) -> str:
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, int):
        return str(x)
    return repr(x)


def _render_literal(v: Value) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return json.dumps(v, ensure_ascii=False)
    if isinstance(v, (int, float)):
        return _render_number(v)
    raise TypeError(f"cannot render literal {v!r}")


def render_predicate(p: Predicate) -> str:
    if isinstance(p, Compare):
        return f"{p.op} {_render_number(p.threshold)}"
    if isinstance(p, Between):
        return f"between({_render_number(p.lo)}, {_render_number(p.hi)})"
    if isinstance(p, InSet):
        return "in {" + ", ".join(_render_literal(v) for v in p.values) + "}"
    raise TypeError(f"not a predicate: {p!r}")


# or binds loosest (1), then and (2), then not (3); leaves are atomic.
# right operands require strictly higher precedence so that right-nested
# trees keep their parentheses and the parse is an exact inverse.

def _prec(expr: FilterExpr) -> int:
    if isinstance(expr, Or):
        return 1
    if isinstance(expr, And):
        return 2
    if isinstance(expr, Not):
        return 3
    return 4


def render_expr(expr: FilterExpr, min_prec: int = 1) -> str:
    prec = _prec(expr)
    if isinstance(expr, Or):
        text = f"{render_expr(expr.left, 1)} or {render_expr(expr.right, 2)}"
    elif isinstance(expr, And):
        text = f"{render_expr(expr.left, 2)} and {render_expr(expr.right, 3)}"
    elif isinstance(expr, Not):
        text = f"not {render_expr(expr.operand, 3)}"
    elif isinstance(expr, NullTest):
        text = f"{expr.column} is not null" if expr.negated else f"{expr.column} is null"
    elif isinstance(expr, Comparison):
        text = f"{expr.column} {expr.op} {_render_literal(expr.literal)}"
    else:
        raise TypeError(f"not a filter expression: {expr!r}")
    if prec < min_prec:
        return f"({text})"
    return text


def render_constraint(c: Constraint) -> str:
    col = json.dumps(c.columns[0], ensure_ascii=False) if c.columns else ""
    if c.verb in ("isComplete", "isUnique"):
        body = f"{c.verb}({col})"
    elif c.verb == "hasApproxQuantile":
        body = f"{c.verb}({col}, {_render_number(c.quantile)}, {render_predicate(c.predicate)})"
    elif c.verb == "isContainedIn":
        values = "{" + ", ".join(_render_literal(v) for v in c.value_set) + "}"
        body = f"{c.verb}({col}, {values}, {render_predicate(c.predicate)})"
    elif c.verb == "hasPattern":
        pattern = json.dumps(c.pattern, ensure_ascii=False)
        body = f"{c.verb}({col}, {pattern}, {render_predicate(c.predicate)})"
    elif c.verb == "hasSize":
        body = f"{c.verb}({render_predicate(c.predicate)})"
    elif c.verb == "satisfies":
        name = json.dumps(c.expr_name, ensure_ascii=False)
        body = f"{c.verb}({render_expr(c.row_expr)}, {name}, {render_predicate(c.predicate)})"
    else:
        body = f"{c.verb}({col}, {render_predicate(c.predicate)})"
    if c.where is not None:
        body += f".where({render_expr(c.where)})"
    return body
