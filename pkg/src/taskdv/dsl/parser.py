"""Recursive-descent parser for the constraint DSL.

Surface form examples:

    hasCompleteness("email", >= 0.99)
    hasCompleteness("colA", >= 0.99).where(colB > 10)
    isContainedIn("location", {"USA", "FRA"})
    satisfies(status != "COMPLETED" or email is not null, "completed_has_email", >= 1.0)

Target columns are quoted strings; columns inside filter expressions are bare
identifiers. The full grammar ships in docs/grammar.ebnf.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from ..errors import DslSyntaxError
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
    VERBS,
    columns_of_expr,
)

_NUMBER_RE = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_OPS = (">=", "<=", "==", "!=", ">", "<")
_PUNCT = "(){},."

_COMPARISON_OPS = ("==", "!=", ">", ">=", "<", "<=")

_DEFAULT_COVERAGE = Compare("==", 1.0)
_DEFAULT_SATISFIES = Compare(">=", 1.0)


@dataclass(frozen=True)
class _Token:
    kind: str  # ident | number | string | op | punct | eof
    text: str
    value: object
    offset: int  # character offset into the source


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch == '"':
            j = i + 1
            while j < n:
                if text[j] == "\\":
                    j += 2
                    continue
                if text[j] == '"':
                    break
                j += 1
            if j >= n:
                raise DslSyntaxError("unterminated string literal", _byte_offset(text, i))
            raw = text[i : j + 1]
            try:
                value = json.loads(raw)
            except json.JSONDecodeError:
                raise DslSyntaxError("invalid string escape", _byte_offset(text, i))
            tokens.append(_Token("string", raw, value, i))
            i = j + 1
            continue
        two = text[i : i + 2]
        if two in _OPS:
            tokens.append(_Token("op", two, two, i))
            i += 2
            continue
        m = _NUMBER_RE.match(text, i)
        if m:
            raw = m.group()
            value = int(raw) if re.fullmatch(r"[+-]?\d+", raw) else float(raw)
            tokens.append(_Token("number", raw, value, i))
            i = m.end()
            continue
        if ch in (">", "<"):
            tokens.append(_Token("op", ch, ch, i))
            i += 1
            continue
        m = _IDENT_RE.match(text, i)
        if m:
            tokens.append(_Token("ident", m.group(), m.group(), i))
            i = m.end()
            continue
        if ch in _PUNCT:
            tokens.append(_Token("punct", ch, ch, i))
            i += 1
            continue
        raise DslSyntaxError(f"unexpected character {ch!r}", _byte_offset(text, i))
    tokens.append(_Token("eof", "", None, n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message: str, tok: _Token | None = None) -> DslSyntaxError:
        tok = tok or self.peek()
        return DslSyntaxError(message, _byte_offset(self.text, tok.offset))

    def expect_punct(self, ch: str) -> None:
        tok = self.advance()
        if tok.kind != "punct" or tok.text != ch:
            raise self.error(f"expected {ch!r}", tok)

    def expect_ident(self, word: str | None = None) -> str:
        tok = self.advance()
        if tok.kind != "ident":
            raise self.error("expected identifier", tok)
        if word is not None and tok.text != word:
            raise self.error(f"expected {word!r}", tok)
        return tok.text

    def expect_string(self) -> str:
        tok = self.advance()
        if tok.kind != "string":
            raise self.error("expected quoted string", tok)
        return tok.value  # type: ignore[return-value]

    def expect_number(self) -> float:
        tok = self.advance()
        if tok.kind != "number":
            raise self.error("expected number", tok)
        return float(tok.value)  # type: ignore[arg-type]

    # -- literals and predicates ------------------------------------------

    def literal(self) -> Value:
        tok = self.advance()
        if tok.kind == "number":
            return tok.value  # type: ignore[return-value]
        if tok.kind == "string":
            return tok.value  # type: ignore[return-value]
        if tok.kind == "ident" and tok.text in ("true", "false"):
            return tok.text == "true"
        raise self.error("expected literal", tok)

    def literal_set(self) -> tuple[Value, ...]:
        self.expect_punct("{")
        values = [self.literal()]
        while self.peek().kind == "punct" and self.peek().text == ",":
            self.advance()
            values.append(self.literal())
        self.expect_punct("}")
        return tuple(values)

    def predicate(self) -> Predicate:
        tok = self.peek()
        if tok.kind == "op":
            self.advance()
            if tok.text == "!=":
                raise self.error("!= is not a threshold comparator", tok)
            return Compare(tok.text, self.expect_number())
        if tok.kind == "ident" and tok.text == "between":
            self.advance()
            self.expect_punct("(")
            lo = self.expect_number()
            self.expect_punct(",")
            hi = self.expect_number()
            self.expect_punct(")")
            if lo > hi:
                raise self.error("between requires lo <= hi", tok)
            return Between(lo, hi)
        if tok.kind == "ident" and tok.text == "in":
            self.advance()
            return InSet(self.literal_set())
        raise self.error("expected predicate", tok)

    # -- filter expressions ------------------------------------------------

    def filter_expr(self) -> FilterExpr:
        return self._or_expr()

    def _or_expr(self) -> FilterExpr:
        left = self._and_expr()
        while self.peek().kind == "ident" and self.peek().text == "or":
            self.advance()
            left = Or(left, self._and_expr())
        return left

    def _and_expr(self) -> FilterExpr:
        left = self._not_expr()
        while self.peek().kind == "ident" and self.peek().text == "and":
            self.advance()
            left = And(left, self._not_expr())
        return left

    def _not_expr(self) -> FilterExpr:
        if self.peek().kind == "ident" and self.peek().text == "not":
            self.advance()
            return Not(self._not_expr())
        return self._primary()

    def _primary(self) -> FilterExpr:
        tok = self.peek()
        if tok.kind == "punct" and tok.text == "(":
            self.advance()
            expr = self._or_expr()
            self.expect_punct(")")
            return expr
        if tok.kind != "ident":
            raise self.error("expected column name or '('", tok)
        column = self.advance().text
        nxt = self.peek()
        if nxt.kind == "ident" and nxt.text == "is":
            self.advance()
            negated = False
            if self.peek().kind == "ident" and self.peek().text == "not":
                self.advance()
                negated = True
            self.expect_ident("null")
            return NullTest(column, negated)
        if nxt.kind == "op" and nxt.text in _COMPARISON_OPS:
            op = self.advance().text
            return Comparison(column, op, self.literal())
        raise self.error("expected comparison or null test", nxt)

    # -- constraints ---------------------------------------------------------

    def constraint(self) -> Constraint:
        tok = self.advance()
        if tok.kind != "ident":
            raise self.error("expected constraint verb", tok)
        verb = tok.text
        if verb not in VERBS:
            raise self.error(f"unknown verb {verb!r}", tok)
        self.expect_punct("(")
        c = self._verb_body(verb, tok)
        self.expect_punct(")")
        where = None
        if self.peek().kind == "punct" and self.peek().text == ".":
            self.advance()
            self.expect_ident("where")
            self.expect_punct("(")
            where = self.filter_expr()
            self.expect_punct(")")
        eof = self.advance()
        if eof.kind != "eof":
            raise self.error("trailing input after constraint", eof)
        try:
            return Constraint(
                verb=c.verb,
                columns=c.columns,
                predicate=c.predicate,
                where=where,
                quantile=c.quantile,
                value_set=c.value_set,
                pattern=c.pattern,
                row_expr=c.row_expr,
                expr_name=c.expr_name,
            )
        except ValueError as exc:
            raise self.error(str(exc), tok)

    def _verb_body(self, verb: str, tok: _Token) -> Constraint:
        if verb in ("isComplete", "isUnique"):
            return Constraint(verb=verb, columns=(self.expect_string(),))
        if verb in (
            "hasCompleteness",
            "hasMin",
            "hasMax",
            "hasMean",
            "hasStandardDeviation",
            "hasApproxCountDistinct",
        ):
            column = self.expect_string()
            self.expect_punct(",")
            return Constraint(verb=verb, columns=(column,), predicate=self.predicate())
        if verb == "hasApproxQuantile":
            column = self.expect_string()
            self.expect_punct(",")
            q = self.expect_number()
            if not 0.0 <= q <= 1.0:
                raise self.error("quantile must be in [0, 1]", tok)
            self.expect_punct(",")
            return Constraint(
                verb=verb, columns=(column,), predicate=self.predicate(), quantile=q
            )
        if verb == "isContainedIn":
            column = self.expect_string()
            self.expect_punct(",")
            values = self.literal_set()
            predicate: Predicate = _DEFAULT_COVERAGE
            if self.peek().kind == "punct" and self.peek().text == ",":
                self.advance()
                predicate = self.predicate()
            return Constraint(
                verb=verb, columns=(column,), predicate=predicate, value_set=values
            )
        if verb == "hasPattern":
            column = self.expect_string()
            self.expect_punct(",")
            pattern = self.expect_string()
            predicate = _DEFAULT_COVERAGE
            if self.peek().kind == "punct" and self.peek().text == ",":
                self.advance()
                predicate = self.predicate()
            return Constraint(
                verb=verb, columns=(column,), predicate=predicate, pattern=pattern
            )
        if verb == "hasSize":
            return Constraint(verb=verb, columns=(), predicate=self.predicate())
        if verb == "satisfies":
            expr = self.filter_expr()
            self.expect_punct(",")
            name = self.expect_string()
            predicate = _DEFAULT_SATISFIES
            if self.peek().kind == "punct" and self.peek().text == ",":
                self.advance()
                predicate = self.predicate()
            columns = tuple(sorted(columns_of_expr(expr)))
            return Constraint(
                verb=verb,
                columns=columns,
                predicate=predicate,
                row_expr=expr,
                expr_name=name,
            )
        raise self.error(f"unknown verb {verb!r}", tok)


def parse_constraint(text: str) -> Constraint:
    """Parse one constraint; raises DslSyntaxError with a byte offset."""
    return _Parser(text).constraint()


def parse_filter(text: str) -> FilterExpr:
    """Parse a standalone filter expression (used in tests and tools)."""
    parser = _Parser(text)
    expr = parser.filter_expr()
    tok = parser.advance()
    if tok.kind != "eof":
        raise parser.error("trailing input after expression", tok)
    return expr
