"""Selective informative feedback for task adaptation.

Optimizes the generation prompt templates from scarce binary task outcomes.
The learning signal is failure precision: among the evaluations where a
column's constraints (or one constraint) fail, the fraction where the
downstream task also failed. Only constraint failures are informative, so
training condenses to task-column units that surface failures, the lowest
failure-precision constraints are backtraced to assumptions and code for
the proposer, and a candidate prompt set is only charged against the
evaluation budget when its training score does not decrease.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence

from .backend import ChatBackend, ModelRequest
from .dsl.ast import DataUnitTest, TestReport
from .errors import DomainError, GenerationError
from .graph import AssumptionGraph
from .pipeline import _extract_json
from .prompts import PromptSet

MAX_PROPOSE_REASKS = 2
RECONDENSE_EVERY = 5  # full evaluation executions between condensation refreshes


@dataclass(frozen=True)
class Observation:
    task_id: str
    batch_id: str
    outcome: int  # 1 = task ran correctly on the batch, 0 = it failed

    def __post_init__(self):
        if self.outcome not in (0, 1):
            raise ValueError("outcome must be 0 or 1")


@dataclass(frozen=True)
class ObservationSet:
    train: tuple[Observation, ...]
    eval: tuple[Observation, ...]

    def __post_init__(self):
        for role, obs in (("train", self.train), ("eval", self.eval)):
            keys = [(o.task_id, o.batch_id) for o in obs]
            if len(set(keys)) != len(keys):
                raise ValueError(f"duplicate observations in {role} set")
        overlap = {(o.task_id, o.batch_id) for o in self.train} & {
            (o.task_id, o.batch_id) for o in self.eval
        }
        if overlap:
            raise ValueError(f"train/eval observations overlap: {sorted(overlap)}")


@dataclass(frozen=True, order=True)
class TaskColumnUnit:
    task_id: str
    column: str


@dataclass(frozen=True)
class SiftaConfig:
    n_round: int = 3
    b_eval: int = 15
    n_train: int = 3
    n_fb: int = 2
    n_eval: int = 3
    early_stop_patience: int = 20
    seed: int = 1

    def __post_init__(self):
        for name in ("n_round", "b_eval", "n_train", "n_fb", "n_eval", "early_stop_patience", "seed"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")


# ---------------------------------------------------------------------------
# Failure precision
# ---------------------------------------------------------------------------

def column_prediction(test: DataUnitTest, column: str, report: TestReport) -> int:
    """Conjunction of the column's constraint outcomes (errors excluded)."""
    for c in test.constraints:
        if column not in c.columns:
            continue
        outcome = report.outcome(c.id)
        if outcome.status == "fail":
            return 0
    return 1


def compute_cfpr(
    test: DataUnitTest,
    column: str,
    evaluated: Sequence[tuple[TestReport, int]],
) -> float | None:
    """Column-level failure precision over (report, task outcome) pairs.

    None (not 0) when the column's prediction never fails: such units carry
    no information.
    """
    denominator = 0
    numerator = 0
    for report, outcome in evaluated:
        if column_prediction(test, column, report) == 0:
            denominator += 1
            if outcome == 0:
                numerator += 1
    if denominator == 0:
        return None
    return numerator / denominator


def compute_fpr(
    test: DataUnitTest,
    constraint_id: str,
    evaluated: Sequence[tuple[TestReport, int]],
) -> float:
    """Constraint-level failure precision; 0 when the constraint never fails."""
    denominator = 0
    numerator = 0
    for report, outcome in evaluated:
        if report.outcome(constraint_id).status == "fail":
            denominator += 1
            if outcome == 0:
                numerator += 1
    if denominator == 0:
        return 0.0
    return numerator / denominator


def accessed_columns(test: DataUnitTest) -> list[str]:
    seen: list[str] = []
    for c in test.constraints:
        for col in c.columns:
            if col not in seen:
                seen.append(col)
    return sorted(seen)


def condense(
    tests: Mapping[str, DataUnitTest],
    evaluated: Mapping[str, Sequence[tuple[TestReport, int]]],
) -> list[TaskColumnUnit]:
    """Task-column units with at least one constraint failure on an observed
    training batch, ordered by (task_id, column)."""
    units: list[TaskColumnUnit] = []
    for task_id in sorted(tests):
        test = tests[task_id]
        reports = [report for report, _ in evaluated.get(task_id, ())]
        for column in accessed_columns(test):
            failing = any(
                report.outcome(c.id).status == "fail"
                for report in reports
                for c in test.constraints
                if column in c.columns
            )
            if failing:
                units.append(TaskColumnUnit(task_id, column))
    return units


def mean_cfpr(cfprs: Sequence[float | None]) -> float:
    """Mean over units; undefined (never-failing) units contribute 0."""
    if not cfprs:
        raise DomainError("mean_cfpr over zero units")
    return sum(v if v is not None else 0.0 for v in cfprs) / len(cfprs)


def select_bottom_k(
    fpr_per_column: Mapping[str, Mapping[str, float]], n_fb: int
) -> dict[str, list[str]]:
    """Per column, the n_fb failing constraints with lowest FPr (ties by id)."""
    if n_fb < 1:
        raise ValueError("n_fb must be >= 1")
    out: dict[str, list[str]] = {}
    for column in sorted(fpr_per_column):
        ranked = sorted(fpr_per_column[column].items(), key=lambda kv: (kv[1], kv[0]))
        out[column] = [cid for cid, _ in ranked[:n_fb]]
    return out


# ---------------------------------------------------------------------------
# Backtraced feedback and proposals
# ---------------------------------------------------------------------------

def _excerpt(source: str, start: int, end: int) -> list[str]:
    lines = source.splitlines()
    return [f"{i:>4} | {lines[i - 1]}" for i in range(start, min(end, len(lines)) + 1)]


def build_feedback(
    units: Sequence[TaskColumnUnit],
    cfpr_by_unit: Mapping[TaskColumnUnit, float | None],
    low_fpr: Mapping[TaskColumnUnit, Sequence[tuple[str, float]]],
    tests: Mapping[str, DataUnitTest],
    graphs: Mapping[str, AssumptionGraph],
    sources: Mapping[str, str],
) -> str:
    """Per-unit scores plus each low-FPr constraint backtraced to its
    assumptions and code lines."""
    from .dsl.render import render_constraint

    if not units:
        return ""
    sections: list[str] = []
    for unit in units:
        cfpr = cfpr_by_unit.get(unit)
        cfpr_text = "undefined (never fails)" if cfpr is None else f"{cfpr:.3f}"
        lines = [f"## task {unit.task_id}, column {unit.column}: failure precision {cfpr_text}"]
        test = tests[unit.task_id]
        graph = graphs[unit.task_id]
        source = sources[unit.task_id]
        for constraint_id, fpr in low_fpr.get(unit, ()):
            constraint = test.constraint(constraint_id)
            lines.append(
                f"- constraint {constraint_id} (FPr {fpr:.3f}): {render_constraint(constraint)}"
            )
            assumptions, spans = graph.backtrace(test, constraint_id)
            for a in assumptions:
                lines.append(f"  assumption {a.id}: {a.text}")
            for span in spans:
                lines.append(f"  code {span.file}:{span.start_line}-{span.end_line}")
                lines.extend("    " + ln for ln in _excerpt(source, span.start_line, span.end_line))
        sections.append("\n".join(lines))
    return "\n\n".join(sections) + "\n"


def propose(
    backend: ChatBackend, prompts: PromptSet, feedback: str, key: str
) -> PromptSet | None:
    """Ask the global proposer for an updated prompt set.

    The proposal may change any subset of templates; unchanged ones carry
    over. Returns None when the proposer keeps producing unusable output,
    in which case the caller skips the proposal without charging budget.
    """
    templates_json = json.dumps(dict(prompts.templates), indent=2, sort_keys=True)
    prompt = prompts.render(
        "proposer_instruction", feedback=feedback or "(no failing units this round)",
        templates_json=templates_json,
    )
    for _ in range(MAX_PROPOSE_REASKS + 1):
        try:
            response = backend.complete(ModelRequest(method="propose", prompt=prompt, key=key))
        except GenerationError:
            return None
        payload = _extract_json(response.text)
        if isinstance(payload, dict) and isinstance(payload.get("templates"), dict):
            updates = payload["templates"]
            try:
                if not all(isinstance(v, str) for v in updates.values()):
                    raise ValueError("template bodies must be strings")
                return prompts.replacing(updates)
            except ValueError:
                pass
        prompt += "\n\nYour previous reply could not be used. Reply with exactly the JSON object described above."
    return None


# ---------------------------------------------------------------------------
# Optimization loop
# ---------------------------------------------------------------------------

class GenerationRunner(Protocol):
    """Bridges the optimizer to test generation and evaluation."""

    def generate(self, prompts: PromptSet, task_id: str) -> tuple[DataUnitTest, AssumptionGraph]: ...

    def evaluate(self, prompts: PromptSet, test: DataUnitTest, task_id: str, batch_id: str) -> TestReport: ...

    def task_source(self, task_id: str) -> str: ...


@dataclass
class OptimizationResult:
    prompts: PromptSet
    eval_score: float
    log: list[dict] = field(default_factory=list)
    charged_evals: int = 0


class _Session:
    """Caches generated tests and reports per prompt-set fingerprint."""

    def __init__(self, runner: GenerationRunner, observations: ObservationSet):
        self.runner = runner
        self._tests: dict[tuple[str, str], tuple[DataUnitTest, AssumptionGraph]] = {}
        self._reports: dict[tuple[str, str, str], TestReport] = {}
        self.train_by_task: dict[str, list[Observation]] = {}
        self.eval_by_task: dict[str, list[Observation]] = {}
        for o in observations.train:
            self.train_by_task.setdefault(o.task_id, []).append(o)
        for o in observations.eval:
            self.eval_by_task.setdefault(o.task_id, []).append(o)

    def test(self, prompts: PromptSet, task_id: str) -> tuple[DataUnitTest, AssumptionGraph]:
        key = (prompts.fingerprint(), task_id)
        if key not in self._tests:
            self._tests[key] = self.runner.generate(prompts, task_id)
        return self._tests[key]

    def evaluated(
        self, prompts: PromptSet, task_id: str, observations: Sequence[Observation]
    ) -> list[tuple[TestReport, int]]:
        test, _ = self.test(prompts, task_id)
        out = []
        for o in observations:
            key = (prompts.fingerprint(), task_id, o.batch_id)
            if key not in self._reports:
                self._reports[key] = self.runner.evaluate(prompts, test, task_id, o.batch_id)
            out.append((self._reports[key], o.outcome))
        return out

    def unit_cfpr(
        self, prompts: PromptSet, unit: TaskColumnUnit, by_task: Mapping[str, list[Observation]]
    ) -> float | None:
        observations = by_task.get(unit.task_id, [])
        test, _ = self.test(prompts, unit.task_id)
        return compute_cfpr(test, unit.column, self.evaluated(prompts, unit.task_id, observations))

    def score(
        self, prompts: PromptSet, units: Sequence[TaskColumnUnit],
        by_task: Mapping[str, list[Observation]],
    ) -> float:
        if not units:
            return 0.0
        return mean_cfpr([self.unit_cfpr(prompts, u, by_task) for u in units])

    def condense_train(self, prompts: PromptSet) -> list[TaskColumnUnit]:
        tests = {}
        evaluated = {}
        for task_id, observations in self.train_by_task.items():
            test, _ = self.test(prompts, task_id)
            tests[task_id] = test
            evaluated[task_id] = self.evaluated(prompts, task_id, observations)
        return condense(tests, evaluated)

    def eval_units(self, prompts: PromptSet) -> list[TaskColumnUnit]:
        """All task-column combinations of the eval tasks (not condensed)."""
        units = []
        for task_id in sorted(self.eval_by_task):
            test, _ = self.test(prompts, task_id)
            units.extend(TaskColumnUnit(task_id, col) for col in accessed_columns(test))
        return units


def _round_rng(seed: int, round_index: int, lane: int) -> random.Random:
    return random.Random(seed * 1_000_003 + round_index * 31 + lane)


def _sample(units: Sequence[TaskColumnUnit], k: int, rng: random.Random) -> list[TaskColumnUnit]:
    if len(units) <= k:
        return sorted(units)
    return sorted(rng.sample(list(units), k))


def optimize(
    config: SiftaConfig,
    observations: ObservationSet,
    initial_prompts: PromptSet,
    runner: GenerationRunner,
    backend: ChatBackend,
) -> OptimizationResult:
    """Budgeted prompt search.

    Per round: condense training units under the current prompts, fix an
    eval sample, then repeatedly sample training units, build backtraced
    feedback, and propose. A candidate is eval-scored (and charged against
    the budget) only if its mean training CFPr does not decrease. The round
    ends when its budget share b_t = floor(b_remain / rounds_left) is spent;
    the whole search ends early after early_stop_patience consecutive
    proposals that fail to beat the best eval score seen so far. Training
    condensation is refreshed every RECONDENSE_EVERY full evaluation
    executions.
    """
    session = _Session(runner, observations)
    prompts = initial_prompts
    b_remain = config.b_eval
    log: list[dict] = []
    charged = 0
    eval_executions = 0
    stale_proposals = 0
    best_seen = float("-inf")
    eval_score = 0.0
    stopped = False

    for t in range(1, config.n_round + 1):
        train_cond = session.condense_train(prompts)
        rng_eval = _round_rng(config.seed, t, lane=1)
        rng_train = _round_rng(config.seed, t, lane=0)
        eval_sample = _sample(session.eval_units(prompts), config.n_eval, rng_eval)
        eval_score = session.score(prompts, eval_sample, session.eval_by_task)
        eval_executions += 1
        best_seen = max(best_seen, eval_score)
        b_t = b_remain // (config.n_round - t + 1)
        candidates: list[tuple[PromptSet, float]] = [(prompts, eval_score)]
        step = 0
        last_recondense = eval_executions

        while b_t > 0:
            if stale_proposals >= config.early_stop_patience:
                stopped = True
                break
            if eval_executions - last_recondense >= RECONDENSE_EVERY:
                train_cond = session.condense_train(prompts)
                last_recondense = eval_executions
            train_sample = _sample(train_cond, config.n_train, rng_train)
            if not train_sample:
                log.append({"round": t, "budget_remaining": b_remain, "note": "no failing training units"})
                break
            train_score = session.score(prompts, train_sample, session.train_by_task)
            cfpr_by_unit = {
                u: session.unit_cfpr(prompts, u, session.train_by_task) for u in train_sample
            }
            low_fpr: dict[TaskColumnUnit, list[tuple[str, float]]] = {}
            tests: dict[str, DataUnitTest] = {}
            graphs: dict[str, AssumptionGraph] = {}
            sources: dict[str, str] = {}
            for unit in train_sample:
                test, graph = session.test(prompts, unit.task_id)
                tests[unit.task_id] = test
                graphs[unit.task_id] = graph
                sources[unit.task_id] = runner.task_source(unit.task_id)
                evaluated = session.evaluated(
                    prompts, unit.task_id, session.train_by_task.get(unit.task_id, [])
                )
                fprs = {}
                for c in test.constraints:
                    if unit.column not in c.columns:
                        continue
                    failing = any(r.outcome(c.id).status == "fail" for r, _ in evaluated)
                    if failing:
                        fprs[c.id] = compute_fpr(test, c.id, evaluated)
                selected = select_bottom_k({unit.column: fprs}, config.n_fb)[unit.column]
                low_fpr[unit] = [(cid, fprs[cid]) for cid in selected]
            feedback = build_feedback(train_sample, cfpr_by_unit, low_fpr, tests, graphs, sources)
            step += 1
            candidate = propose(backend, prompts, feedback, key=f"round{t}_step{step}")

            record = {
                "round": t,
                "budget_remaining": b_remain,
                "train_score": train_score,
                "accepted": False,
                "eval_score": None,
            }
            if candidate is None:
                record["note"] = "proposal skipped (malformed)"
                stale_proposals += 1
            else:
                candidate_train = session.score(candidate, train_sample, session.train_by_task)
                if candidate_train >= train_score:
                    candidate_eval = session.score(candidate, eval_sample, session.eval_by_task)
                    eval_executions += 1
                    b_t -= 1
                    b_remain -= 1
                    charged += 1
                    candidates.append((candidate, candidate_eval))
                    record.update(
                        accepted=True, eval_score=candidate_eval, budget_remaining=b_remain
                    )
                    if candidate_eval > best_seen:
                        best_seen = candidate_eval
                        stale_proposals = 0
                    else:
                        stale_proposals += 1
                else:
                    record["note"] = "train CFPr decreased; not charged"
                    stale_proposals += 1
            log.append(record)

        best_index = max(range(len(candidates)), key=lambda i: candidates[i][1])
        prompts, eval_score = candidates[best_index]
        if stopped:
            break

    return OptimizationResult(prompts=prompts, eval_score=eval_score, log=log, charged_evals=charged)


def write_log(log: Sequence[Mapping], path) -> None:
    from pathlib import Path

    lines = [json.dumps(record, sort_keys=True) for record in log]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
