"""Bipartite graph linking accessed columns to inferred data assumptions.

Column nodes are either a single column name or a canonicalized (sorted)
tuple of names for jointly accessed columns. Edges carry the code spans in
which the assumption manifests. The graph also owns the code-annotation
markers used to point summarization at the relevant lines.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import AnnotationError, SchemaError
from .dsl.ast import DataUnitTest

ColumnNode = str | tuple[str, ...]

_MARKER_RE = re.compile(r" # DVCOL\[[^\]\n]*\]$")


@dataclass(frozen=True, order=True)
class CodeSpan:
    file: str
    start_line: int  # 1-based, inclusive
    end_line: int

    def __post_init__(self):
        if self.start_line < 1 or self.start_line > self.end_line:
            raise ValueError(f"invalid span {self.start_line}..{self.end_line}")


@dataclass(frozen=True)
class Assumption:
    id: str
    text: str
    kind: str  # single_column | multi_column

    def __post_init__(self):
        if not self.text:
            raise ValueError("assumption text must be non-empty")
        if self.kind not in ("single_column", "multi_column"):
            raise ValueError(f"bad assumption kind {self.kind}")


def canonical_node(node: ColumnNode | Iterable[str]) -> ColumnNode:
    if isinstance(node, str):
        return node
    names = tuple(sorted(node))
    if len(names) == 1:
        return names[0]
    return names


def _node_sort_key(node: ColumnNode):
    if isinstance(node, str):
        return (0, (node,))
    return (1, node)


class AssumptionGraph:
    """Single-writer construction; treat as immutable once built."""

    def __init__(self):
        self._column_nodes: set[ColumnNode] = set()
        self._assumptions: dict[str, Assumption] = {}
        self._edges: dict[tuple[ColumnNode, str], tuple[CodeSpan, ...]] = {}

    @property
    def column_nodes(self) -> list[ColumnNode]:
        return sorted(self._column_nodes, key=_node_sort_key)

    @property
    def assumptions(self) -> dict[str, Assumption]:
        return dict(self._assumptions)

    @property
    def edges(self) -> list[tuple[ColumnNode, str, tuple[CodeSpan, ...]]]:
        return [
            (node, aid, spans)
            for (node, aid), spans in sorted(
                self._edges.items(), key=lambda kv: (_node_sort_key(kv[0][0]), kv[0][1])
            )
        ]

    def add_column_node(self, node: ColumnNode | Iterable[str]) -> ColumnNode:
        node = canonical_node(node)
        self._column_nodes.add(node)
        return node

    def link(
        self,
        column_node: ColumnNode | Iterable[str],
        assumption: Assumption,
        spans: Sequence[CodeSpan] = (),
    ) -> "AssumptionGraph":
        """Attach an assumption to a registered column node (idempotent)."""
        node = canonical_node(column_node)
        if node not in self._column_nodes:
            raise SchemaError(f"column node {node!r} is not registered")
        existing = self._assumptions.get(assumption.id)
        if existing is not None and existing != assumption:
            raise ValueError(f"assumption {assumption.id} already present with different content")
        self._assumptions[assumption.id] = assumption
        key = (node, assumption.id)
        merged = set(self._edges.get(key, ())) | set(spans)
        self._edges[key] = tuple(sorted(merged))
        return self

    def spans_of(self, assumption_id: str) -> tuple[CodeSpan, ...]:
        spans: set[CodeSpan] = set()
        for (node, aid), edge_spans in self._edges.items():
            if aid == assumption_id:
                spans.update(edge_spans)
        return tuple(sorted(spans))

    def backtrace(
        self, test: DataUnitTest, constraint_id: str
    ) -> tuple[list[Assumption], list[CodeSpan]]:
        """Assumptions a constraint was generated from, plus their code spans."""
        constraint = test.constraint(constraint_id)  # KeyError if unknown
        assumptions = [
            self._assumptions[aid]
            for aid in constraint.assumption_ids
            if aid in self._assumptions
        ]
        spans: set[CodeSpan] = set()
        for a in assumptions:
            spans.update(self.spans_of(a.id))
        return assumptions, sorted(spans)

    # -- serialization -----------------------------------------------------

    def to_json(self) -> str:
        def node_payload(node: ColumnNode):
            return node if isinstance(node, str) else list(node)

        payload = {
            "columns": [node_payload(n) for n in self.column_nodes],
            "assumptions": [
                {"id": a.id, "text": a.text, "kind": a.kind}
                for a in sorted(self._assumptions.values(), key=lambda a: a.id)
            ],
            "edges": [
                {
                    "column": node_payload(node),
                    "assumption_id": aid,
                    "spans": [
                        {"file": s.file, "start_line": s.start_line, "end_line": s.end_line}
                        for s in spans
                    ],
                }
                for node, aid, spans in self.edges
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "AssumptionGraph":
        payload = json.loads(text)
        g = cls()
        for node in payload["columns"]:
            g.add_column_node(node if isinstance(node, str) else tuple(node))
        assumptions = {
            a["id"]: Assumption(a["id"], a["text"], a["kind"]) for a in payload["assumptions"]
        }
        for edge in payload["edges"]:
            node = edge["column"]
            spans = [
                CodeSpan(s["file"], s["start_line"], s["end_line"]) for s in edge["spans"]
            ]
            g.link(node if isinstance(node, str) else tuple(node), assumptions[edge["assumption_id"]], spans)
        return g

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "AssumptionGraph":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# Code annotation: trailing " # DVCOL[a,b]" markers that survive execution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnnotatedCode:
    text: str

    def stripped(self) -> str:
        return strip_annotations(self.text)


def _split_terminator(line: str) -> tuple[str, str]:
    for term in ("\r\n", "\n", "\r"):
        if line.endswith(term):
            return line[: -len(term)], term
    return line, ""


def annotate_code(
    source: str, spans: Mapping[str, Sequence[CodeSpan]] | Mapping[ColumnNode, Sequence[CodeSpan]]
) -> AnnotatedCode:
    """Append one per-line marker naming every column whose spans cover it.

    Rejects sources that already contain marker-shaped text, so stripping
    always recovers the input byte-exactly.
    """
    lines = source.splitlines(keepends=True)
    for line in lines:
        body, _ = _split_terminator(line)
        if _MARKER_RE.search(body):
            raise AnnotationError("source already contains annotation markers")
    per_line: dict[int, set[str]] = {}
    for node, node_spans in spans.items():
        names = [node] if isinstance(node, str) else list(node)
        for span in node_spans:
            if span.end_line > len(lines):
                raise AnnotationError(
                    f"span {span.start_line}..{span.end_line} exceeds {len(lines)} lines"
                )
            for ln in range(span.start_line, span.end_line + 1):
                per_line.setdefault(ln, set()).update(names)
    out = []
    for idx, line in enumerate(lines, start=1):
        if idx in per_line:
            body, term = _split_terminator(line)
            marker = " # DVCOL[" + ",".join(sorted(per_line[idx])) + "]"
            out.append(body + marker + term)
        else:
            out.append(line)
    return AnnotatedCode("".join(out))


def strip_annotations(text: str) -> str:
    out = []
    for line in text.splitlines(keepends=True):
        body, term = _split_terminator(line)
        out.append(_MARKER_RE.sub("", body) + term)
    return "".join(out)
