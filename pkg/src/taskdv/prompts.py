"""Prompt templates for the model-backed generation methods.

A PromptSet carries one template per method. Templates use $name
placeholders (string.Template), so JSON examples and braces stay literal;
rendering with an unbound placeholder is an error, so broken proposals
surface immediately instead of producing garbage prompts.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from string import Template
from typing import Mapping

TEMPLATE_NAMES = (
    "discover_column_access",
    "discover_joint_column_access",
    "column_dataflow",
    "multi_column_dataflow",
    "summarize_link",
    "gen_column_constraints",
    "gen_multi_column_constraints",
    "proposer_instruction",
)

_GRAMMAR_HINT = """\
Constraints use this grammar (one constraint per string):
  hasCompleteness("col", >= 0.99)         non-null ratio
  isComplete("col") / isUnique("col")
  hasMin("col", >= 0.0) / hasMax / hasMean / hasStandardDeviation("col", > 0.0)
  hasApproxCountDistinct("col", <= 100)
  hasApproxQuantile("col", 0.5, between(10, 20))
  isContainedIn("col", {"A", "B"})
  hasPattern("col", "[A-Z]{3}")
  hasSize(>= 1)
  satisfies(status != "COMPLETED" or email is not null, "check_name", >= 1.0)
Any constraint may end with .where(<row condition>); row conditions combine
comparisons (col == 1, col != "x"), null tests (col is null / is not null)
with and/or/not."""

DEFAULT_TEMPLATES: dict[str, str] = {
    "discover_column_access": (
        "You are analyzing a data processing script to find which input table columns it reads.\n"
        "Table columns: $schema\n"
        "Column statistics:\n$profile_json\n"
        "Script:\n```\n$code\n```\n"
        'Reply with JSON only: {"columns": ["colA", ...]} listing every input column the\n'
        "script reads directly or through derived values. Use [] if it reads none."
    ),
    "discover_joint_column_access": (
        "The script below reads these input columns: $accessed\n"
        "Script:\n```\n$code\n```\n"
        "Find groups of two or more of those columns whose values are used together, e.g.\n"
        "one column's handling depends on another column's value.\n"
        'Reply with JSON only: {"column_sets": [["colA", "colB"], ...]} (possibly []).'
    ),
    "column_dataflow": (
        "The script below reads the input column $column. Lines are numbered.\n"
        "Script:\n$code_numbered\n"
        "List the line ranges that operate on $column or on values derived from it.\n"
        'Reply with JSON only: {"spans": [{"start_line": 3, "end_line": 4}, ...]} (possibly []).'
    ),
    "multi_column_dataflow": (
        "The script below reads the input columns $columns together. Lines are numbered.\n"
        "Script:\n$code_numbered\n"
        "List the line ranges where these columns interact.\n"
        'Reply with JSON only: {"spans": [{"start_line": 3, "end_line": 4}, ...]} (possibly []).'
    ),
    "summarize_link": (
        "The script below is annotated: lines relevant to $node end with a # DVCOL[...] marker.\n"
        "Column statistics:\n$profile_json\n"
        "Script:\n```\n$annotated_code\n```\n"
        "State the implicit assumptions the script makes about $node in the input data:\n"
        "conditions that, if violated by a data batch, would make the script crash or\n"
        "silently misbehave. Only include assumptions about the input data itself.\n"
        'Reply with JSON only: {"assumptions": [{"text": "..."}]} (possibly []).'
    ),
    "gen_column_constraints": (
        "Write data unit test constraints for the column $column.\n"
        "Data assumptions inferred from the consuming script:\n$assumptions_json\n"
        "Column statistics:\n$profile_json\n"
        + _GRAMMAR_HINT
        + "\nEvery constraint must hold on the trusted data sample described by the statistics.\n"
        'Reply with JSON only: {"constraints": [{"text": "...", "assumption_ids": ["a1"]}]}.'
    ),
    "gen_multi_column_constraints": (
        "Write data unit test constraints covering the columns $columns jointly.\n"
        "Data assumptions inferred from the consuming script:\n$assumptions_json\n"
        "Column statistics:\n$profile_json\n"
        + _GRAMMAR_HINT
        + "\nPrefer satisfies(...) row conditions for cross-column dependencies.\n"
        'Reply with JSON only: {"constraints": [{"text": "...", "assumption_ids": ["a1"]}]}.'
    ),
    "proposer_instruction": (
        "You tune the prompt templates of a pipeline that generates data unit tests from\n"
        "task code and data profiles. Tests are scored by failure precision: among the\n"
        "batches where a column's constraints fail, the fraction where the consuming task\n"
        "also fails. Low failure precision means false alarms; raise it by making the\n"
        "generation prompts produce constraints that only fire on task-breaking data.\n"
        "Feedback from the latest round:\n$feedback\n"
        "Current templates:\n$templates_json\n"
        'Reply with JSON only: {"templates": {"<template name>": "<new text>"}} containing\n'
        "just the templates you want to change. Keep $placeholder tokens intact."
    ),
}


def _placeholders(template: str) -> set[str]:
    names = set()
    for match in Template.pattern.finditer(template):
        name = match.group("named") or match.group("braced")
        if name:
            names.add(name)
    return names


@dataclass(frozen=True)
class PromptSet:
    templates: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_TEMPLATES))

    def __post_init__(self):
        missing = [n for n in TEMPLATE_NAMES if n not in self.templates]
        if missing:
            raise ValueError(f"prompt set is missing templates: {missing}")
        empty = [n for n, t in self.templates.items() if not t.strip()]
        if empty:
            raise ValueError(f"prompt set has empty templates: {empty}")

    def render(self, name: str, **bindings) -> str:
        template = self.templates[name]
        unbound = _placeholders(template) - set(bindings)
        if unbound:
            raise ValueError(f"template {name} has unbound placeholders: {sorted(unbound)}")
        return Template(template).safe_substitute(**bindings)

    def replacing(self, updates: Mapping[str, str]) -> "PromptSet":
        unknown = [n for n in updates if n not in TEMPLATE_NAMES]
        if unknown:
            raise ValueError(f"unknown template names: {unknown}")
        merged = dict(self.templates)
        merged.update(updates)
        return PromptSet(merged)

    def fingerprint(self) -> str:
        canonical = json.dumps(
            {n: self.templates[n] for n in TEMPLATE_NAMES}, sort_keys=True
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    def to_json(self) -> str:
        return (
            json.dumps(
                {"templates": {n: self.templates[n] for n in TEMPLATE_NAMES}},
                indent=2,
                sort_keys=True,
                ensure_ascii=False,
            )
            + "\n"
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "PromptSet":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(payload["templates"])


def default_prompt_set() -> PromptSet:
    return PromptSet(dict(DEFAULT_TEMPLATES))
