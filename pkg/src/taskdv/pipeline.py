"""Compound generation workflow: discovery, dataflow analysis, assumption
inference, constraint generation, and post-processing over a chat backend,
plus the profile-only heuristic suggester used as a baseline.

The model-facing steps fan out per column with bounded parallelism; the
assumption graph and the final test are assembled by a single coordinator in
deterministic column order, so runs with a fixed backend are reproducible.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

from .backend import ChatBackend, ModelRequest
from .dsl import Constraint, DataUnitTest, make_test, parse_constraint, precheck_constraint
from .dsl.ast import Compare, InSet
from .errors import DslSyntaxError, GenerationError, SchemaError
from .graph import AnnotatedCode, Assumption, AssumptionGraph, CodeSpan, annotate_code, canonical_node
from .profiler import ColumnProfile, profile_data
from .prompts import PromptSet, default_prompt_set
from .sketches import DEFAULT_SKETCH_SEED
from .tabular import Dataset, ValueKind, _render_cell

log = logging.getLogger(__name__)

MAX_REPAIR_ASKS = 2


@dataclass(frozen=True)
class GenerationContext:
    task_id: str
    task_source: str  # assertion-stripped
    sample: Dataset
    profiles: tuple[ColumnProfile, ...]
    source_name: str = ""

    @property
    def schema(self) -> list[str]:
        return [p.name for p in self.profiles]

    @property
    def script_name(self) -> str:
        return self.source_name or f"{self.task_id}.py"


def make_context(
    task_id: str,
    task_source: str,
    sample: Dataset,
    histogram_threshold: int = 50,
    sketch_seed: int = DEFAULT_SKETCH_SEED,
    source_name: str = "",
) -> GenerationContext:
    profiles = tuple(profile_data(sample, histogram_threshold, sketch_seed))
    return GenerationContext(task_id, task_source, sample, profiles, source_name)


@dataclass
class GenerationStats:
    generated: int = 0
    non_executable: int = 0
    discarded: int = 0
    duplicates: int = 0
    warnings: list[str] = field(default_factory=list)

    def warn(self, message: str) -> None:
        self.warnings.append(message)
        log.warning(message)


def _profile_summary(profiles: Sequence[ColumnProfile]) -> str:
    entries = []
    for p in profiles:
        entry: dict = {
            "name": p.name,
            "type": p.inferred_type.value,
            "completeness": round(p.completeness, 4),
            "approx_distinct": round(p.approx_distinct, 1),
        }
        if p.histogram is not None:
            entry["histogram"] = {
                _render_cell(k): v
                for k, v in sorted(p.histogram.items(), key=lambda kv: _render_cell(kv[0]))
            }
        if p.mean is not None:
            entry.update(
                mean=round(p.mean, 6),
                stddev=round(p.stddev, 6),
                min=p.min,
                max=p.max,
            )
        entry["samples"] = [_render_cell(v) for v in p.sample_values]
        entries.append(entry)
    return json.dumps(entries, ensure_ascii=False)


def _numbered(source: str) -> str:
    return "\n".join(f"{i:>4} | {line}" for i, line in enumerate(source.splitlines(), start=1))


def _extract_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    start, end = text.find("{"), text.rfind("}")
    if start != -1 and end > start:
        try:
            return json.loads(text[start : end + 1])
        except json.JSONDecodeError:
            return None
    return None


def _node_key(node) -> str:
    return node if isinstance(node, str) else "+".join(node)


class Generator:
    """Runs the generation workflow for one task against a chat backend."""

    def __init__(
        self,
        backend: ChatBackend,
        prompts: PromptSet | None = None,
        parallelism: int = 4,
        sketch_seed: int = DEFAULT_SKETCH_SEED,
    ):
        self.backend = backend
        self.prompts = prompts or default_prompt_set()
        self.parallelism = max(1, parallelism)
        self.sketch_seed = sketch_seed

    # -- backend plumbing ----------------------------------------------------

    def _ask_json(self, method: str, template: str, key: str, validator, **bindings):
        prompt = self.prompts.render(template, **bindings)
        for attempt in range(MAX_REPAIR_ASKS + 1):
            response = self.backend.complete(ModelRequest(method=method, prompt=prompt, key=key))
            payload = _extract_json(response.text)
            if payload is not None:
                try:
                    return validator(payload)
                except (ValueError, TypeError, KeyError) as exc:
                    reason = str(exc)
            else:
                reason = "reply was not a JSON object"
            prompt = (
                prompt
                + "\n\nYour previous reply could not be used ("
                + reason
                + "). Reply with exactly the JSON object described above."
            )
        raise GenerationError(f"{method}: unusable output after {MAX_REPAIR_ASKS} re-asks ({key})")

    # -- Table-1 methods -------------------------------------------------------

    def discover_column_access(self, ctx: GenerationContext) -> list[str]:
        """Columns the task reads; hallucinated names are filtered out."""
        if not ctx.schema:
            raise SchemaError("cannot discover column access against an empty schema")

        def validate(payload):
            cols = payload["columns"]
            if not isinstance(cols, list) or not all(isinstance(c, str) for c in cols):
                raise ValueError('"columns" must be a list of strings')
            return cols

        raw = self._ask_json(
            "discover_column_access",
            "discover_column_access",
            key=ctx.task_id,
            validator=validate,
            schema=", ".join(ctx.schema),
            profile_json=_profile_summary(ctx.profiles),
            code=ctx.task_source,
        )
        known = set(ctx.schema)
        for name in raw:
            if name not in known:
                log.warning("discover_column_access: dropping unknown column %r", name)
        wanted = {name for name in raw if name in known}
        return [name for name in ctx.schema if name in wanted]

    def discover_joint_column_access(
        self, ctx: GenerationContext, accessed: Sequence[str]
    ) -> list[tuple[str, ...]]:
        if not set(accessed) <= set(ctx.schema):
            raise SchemaError("accessed columns must be a subset of the schema")
        if len(accessed) < 2:
            return []

        def validate(payload):
            sets = payload["column_sets"]
            if not isinstance(sets, list) or not all(
                isinstance(s, list) and all(isinstance(c, str) for c in s) for s in sets
            ):
                raise ValueError('"column_sets" must be a list of column-name lists')
            return sets

        raw = self._ask_json(
            "discover_joint_column_access",
            "discover_joint_column_access",
            key=ctx.task_id,
            validator=validate,
            accessed=", ".join(accessed),
            code=ctx.task_source,
        )
        out: list[tuple[str, ...]] = []
        for s in raw:
            canon = tuple(sorted(set(s)))
            if len(canon) < 2:
                continue
            if not set(canon) <= set(accessed):
                log.warning("discover_joint_column_access: dropping %r (not in accessed set)", s)
                continue
            if canon not in out:
                out.append(canon)
        return sorted(out)

    def _dataflow(self, ctx: GenerationContext, node, method: str, template: str, **bindings) -> list[CodeSpan]:
        def validate(payload):
            spans = payload["spans"]
            if not isinstance(spans, list):
                raise ValueError('"spans" must be a list')
            for s in spans:
                int(s["start_line"]), int(s["end_line"])
            return spans

        raw = self._ask_json(
            method,
            template,
            key=f"{ctx.task_id}__{_node_key(node)}",
            validator=validate,
            code_numbered=_numbered(ctx.task_source),
            **bindings,
        )
        line_count = len(ctx.task_source.splitlines())
        spans: list[CodeSpan] = []
        for s in raw:
            start, end = int(s["start_line"]), int(s["end_line"])
            if start > end or start > line_count:
                log.warning("%s: dropping out-of-range span %s..%s", method, start, end)
                continue
            if start < 1 or end > line_count:
                log.warning("%s: clipping span %s..%s to file bounds", method, start, end)
                start, end = max(start, 1), min(end, line_count)
            spans.append(CodeSpan(ctx.script_name, start, end))
        return sorted(set(spans))

    def column_dataflow_analysis(self, ctx: GenerationContext, column: str) -> list[CodeSpan]:
        return self._dataflow(ctx, column, "column_dataflow", "column_dataflow", column=column)

    def multi_column_dataflow_analysis(
        self, ctx: GenerationContext, columns: tuple[str, ...]
    ) -> list[CodeSpan]:
        return self._dataflow(
            ctx,
            columns,
            "multi_column_dataflow",
            "multi_column_dataflow",
            columns=", ".join(columns),
        )

    def _fetch_assumptions(
        self, ctx: GenerationContext, node, annotated: AnnotatedCode
    ) -> list[str]:
        def validate(payload):
            assumptions = payload["assumptions"]
            if not isinstance(assumptions, list):
                raise ValueError('"assumptions" must be a list')
            texts = []
            for a in assumptions:
                text = a["text"]
                if not isinstance(text, str) or not text.strip():
                    raise ValueError("assumption text must be a non-empty string")
                texts.append(text.strip())
            return texts

        return self._ask_json(
            "summarize_link",
            "summarize_link",
            key=f"{ctx.task_id}__{_node_key(node)}",
            validator=validate,
            node=_node_key(node),
            annotated_code=annotated.text,
            profile_json=_profile_summary(ctx.profiles),
        )

    def summarize_and_link_assumptions(
        self,
        ctx: GenerationContext,
        column_node,
        annotated: AnnotatedCode,
        graph: AssumptionGraph,
        spans: Sequence[CodeSpan],
        id_start: int = 1,
    ) -> list[Assumption]:
        """Fetch assumptions for one node and link them into the graph."""
        node = canonical_node(column_node)
        if not spans:
            return []
        kind = "single_column" if isinstance(node, str) else "multi_column"
        texts = self._fetch_assumptions(ctx, node, annotated)
        assumptions = []
        for offset, text in enumerate(texts):
            assumption = Assumption(id=f"a{id_start + offset}", text=text, kind=kind)
            graph.link(node, assumption, spans)
            assumptions.append(assumption)
        return assumptions

    def _generate_for_node(
        self, ctx: GenerationContext, node, graph: AssumptionGraph, stats: GenerationStats
    ) -> list[Constraint]:
        node = canonical_node(node)
        node_assumptions = [
            (aid, graph.assumptions[aid].text)
            for (n, aid, _spans) in graph.edges
            if n == node
        ]
        if not node_assumptions:
            return []
        known_ids = {aid for aid, _ in node_assumptions}
        assumptions_json = json.dumps(
            [{"id": aid, "text": text} for aid, text in node_assumptions], ensure_ascii=False
        )

        def validate(payload):
            entries = payload["constraints"]
            if not isinstance(entries, list):
                raise ValueError('"constraints" must be a list')
            out = []
            for e in entries:
                text = e["text"]
                ids = e.get("assumption_ids", [])
                if not isinstance(text, str):
                    raise ValueError("constraint text must be a string")
                out.append((text, tuple(i for i in ids if i in known_ids)))
            return out

        if isinstance(node, str):
            method, template = "gen_column_constraints", "gen_column_constraints"
            bindings = {"column": node}
        else:
            method, template = "gen_multi_column_constraints", "gen_multi_column_constraints"
            bindings = {"columns": ", ".join(node)}
        entries = self._ask_json(
            method,
            template,
            key=f"{ctx.task_id}__{_node_key(node)}",
            validator=validate,
            assumptions_json=assumptions_json,
            profile_json=_profile_summary(ctx.profiles),
            **bindings,
        )
        constraints: list[Constraint] = []
        for text, assumption_ids in entries:
            try:
                parsed = parse_constraint(text)
            except DslSyntaxError as exc:
                stats.non_executable += 1
                stats.warn(f"{ctx.task_id}/{_node_key(node)}: dropping unparseable constraint {text!r} ({exc})")
                continue
            constraint = replace(parsed, assumption_ids=assumption_ids)
            if constraint in constraints:
                stats.duplicates += 1
                continue
            constraints.append(constraint)
        return constraints

    def generate_column_constraints(
        self, ctx: GenerationContext, column: str, graph: AssumptionGraph,
        stats: GenerationStats | None = None,
    ) -> list[Constraint]:
        return self._generate_for_node(ctx, column, graph, stats or GenerationStats())

    def generate_multi_column_constraints(
        self, ctx: GenerationContext, columns: tuple[str, ...], graph: AssumptionGraph,
        stats: GenerationStats | None = None,
    ) -> list[Constraint]:
        return self._generate_for_node(ctx, columns, graph, stats or GenerationStats())

    # -- end-to-end -----------------------------------------------------------

    def generate_unit_test(
        self, ctx: GenerationContext
    ) -> tuple[DataUnitTest, AssumptionGraph, GenerationStats]:
        """profile -> discover -> dataflow -> annotate -> summarize -> generate -> precheck."""
        stats = GenerationStats()
        graph = AssumptionGraph()

        accessed = self.discover_column_access(ctx)
        try:
            joint = self.discover_joint_column_access(ctx, accessed)
        except GenerationError as exc:
            stats.warn(f"{ctx.task_id}: joint column discovery failed ({exc})")
            joint = []
        nodes: list = list(accessed) + list(joint)
        for node in nodes:
            graph.add_column_node(node)

        def analyze(node):
            try:
                if isinstance(node, str):
                    spans = self.column_dataflow_analysis(ctx, node)
                else:
                    spans = self.multi_column_dataflow_analysis(ctx, node)
                if not spans:
                    return node, [], None
                annotated = annotate_code(ctx.task_source, {node: spans})
                texts = self._fetch_assumptions(ctx, canonical_node(node), annotated)
                return node, spans, texts
            except GenerationError as exc:
                stats.warn(f"{ctx.task_id}/{_node_key(node)}: analysis failed ({exc})")
                return node, [], None

        with ThreadPoolExecutor(max_workers=self.parallelism) as pool:
            analyzed = list(pool.map(analyze, nodes))

        next_assumption = 1
        productive: list = []
        for node, spans, texts in analyzed:
            if not texts:
                continue
            kind = "single_column" if isinstance(node, str) else "multi_column"
            for text in texts:
                assumption = Assumption(id=f"a{next_assumption}", text=text, kind=kind)
                next_assumption += 1
                graph.link(canonical_node(node), assumption, spans)
            productive.append(node)

        def generate(node):
            try:
                return self._generate_for_node(ctx, node, graph, stats)
            except GenerationError as exc:
                stats.warn(f"{ctx.task_id}/{_node_key(node)}: constraint generation failed ({exc})")
                return []

        with ThreadPoolExecutor(max_workers=self.parallelism) as pool:
            generated = list(pool.map(generate, productive))

        candidates: list[Constraint] = []
        for constraints in generated:
            for c in constraints:
                if c in candidates:
                    stats.duplicates += 1
                else:
                    candidates.append(c)
        stats.generated = len(candidates)

        accepted: list[Constraint] = []
        for c in candidates:
            result = precheck_constraint(c, ctx.sample)
            if result.accepted:
                accepted.append(c)
            else:
                stats.discarded += 1
                stats.warn(f"{ctx.task_id}: precheck discarded constraint ({result.reason})")
        test = make_test(f"{ctx.task_id}-test", ctx.task_id, accepted)
        return test, graph, stats


# ---------------------------------------------------------------------------
# Task-agnostic heuristic suggestion (profile-only baseline)
# ---------------------------------------------------------------------------

def _floor2(x: float) -> float:
    return math.floor(x * 100.0) / 100.0


def _sorted_values(values) -> list:
    return sorted(values, key=lambda v: (type(v).__name__, _render_cell(v)))


def suggest_task_agnostic(
    profiles: Sequence[ColumnProfile], task_id: str = "task_agnostic"
) -> DataUnitTest:
    """Heuristic constraints from the profile alone, one pass per column:
    completeness at the observed ratio, containment in observed histogram
    keys, observed numeric bounds, and uniqueness for near-unique columns.
    """
    constraints: list[Constraint] = []
    for p in profiles:
        if p.completeness >= 1.0:
            constraints.append(Constraint(verb="isComplete", columns=(p.name,)))
        else:
            constraints.append(
                Constraint(
                    verb="hasCompleteness",
                    columns=(p.name,),
                    predicate=Compare(">=", _floor2(p.completeness)),
                )
            )
        if p.histogram is not None:
            constraints.append(
                Constraint(
                    verb="isContainedIn",
                    columns=(p.name,),
                    predicate=Compare("==", 1.0),
                    value_set=tuple(_sorted_values(p.histogram.keys())),
                )
            )
        if p.inferred_type in (ValueKind.INTEGER, ValueKind.REAL) and p.min is not None:
            constraints.append(
                Constraint(verb="hasMin", columns=(p.name,), predicate=Compare(">=", p.min))
            )
            constraints.append(
                Constraint(verb="hasMax", columns=(p.name,), predicate=Compare("<=", p.max))
            )
        if p.non_null_count > 0 and p.approx_distinct >= 0.99 * p.non_null_count:
            constraints.append(Constraint(verb="isUnique", columns=(p.name,)))
    return make_test(f"{task_id}-suggested", task_id, constraints)
