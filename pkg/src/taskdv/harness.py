"""Task execution harness: assertion blocks, labeling, metrics, splits.

Task scripts embed ground-truth data assumptions between sentinel comments
(# ASSERTION_START / # ASSERTION_END). Stripping the blocks yields the code
handed to the system under test; running with blocks enabled labels batches.
Each run gets a fresh temp directory holding only the script variant and the
one batch under test.
"""

from __future__ import annotations

import random
import re
import subprocess
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .errors import AssertionFormatError, EnvironmentError_
from .tabular import Batch, Dataset, load_table, write_csv

ASSERTION_START = "# ASSERTION_START"
ASSERTION_END = "# ASSERTION_END"

DEFAULT_TIMEOUT = 60.0
DEFAULT_INTERPRETER = (sys.executable, "{script}", "{batch}")

_TRACE_LINE_RE = re.compile(r'File "([^"]+)", line (\d+)')


@dataclass(frozen=True)
class TaskArtifact:
    id: str
    script_path: str
    interpreter_command: tuple[str, ...] = DEFAULT_INTERPRETER
    timeout: float = DEFAULT_TIMEOUT

    def source(self) -> str:
        return Path(self.script_path).read_text(encoding="utf-8")


@dataclass(frozen=True)
class AssertionBlock:
    index: int  # 1-based position among the source's blocks
    start_line: int  # line number of the start sentinel, 1-based
    end_line: int  # line number of the end sentinel
    lines: tuple[str, ...]  # exact lines including sentinels and terminators


@dataclass(frozen=True)
class RunOutcome:
    exit_status: int
    timed_out: bool
    failed_block: int | None
    stdout: str
    stderr: str

    @property
    def ok(self) -> bool:
        return self.exit_status == 0 and not self.timed_out


@dataclass(frozen=True)
class Label:
    task_id: str
    batch_id: str
    value: str  # safe | erroneous


# ---------------------------------------------------------------------------
# Assertion block mechanics
# ---------------------------------------------------------------------------

def _is_sentinel(line: str, sentinel: str) -> bool:
    return line.strip() == sentinel


def strip_assertions(source: str) -> tuple[str, list[AssertionBlock]]:
    """Remove every assertion block; reinsert_assertions() is the exact inverse."""
    lines = source.splitlines(keepends=True)
    stripped: list[str] = []
    blocks: list[AssertionBlock] = []
    block_start: int | None = None
    block_lines: list[str] = []
    for number, line in enumerate(lines, start=1):
        if _is_sentinel(line, ASSERTION_START):
            if block_start is not None:
                raise AssertionFormatError(f"nested {ASSERTION_START} at line {number}")
            block_start = number
            block_lines = [line]
        elif _is_sentinel(line, ASSERTION_END):
            if block_start is None:
                raise AssertionFormatError(f"unmatched {ASSERTION_END} at line {number}")
            block_lines.append(line)
            blocks.append(
                AssertionBlock(
                    index=len(blocks) + 1,
                    start_line=block_start,
                    end_line=number,
                    lines=tuple(block_lines),
                )
            )
            block_start = None
            block_lines = []
        elif block_start is not None:
            block_lines.append(line)
        else:
            stripped.append(line)
    if block_start is not None:
        raise AssertionFormatError(f"unterminated {ASSERTION_START} at line {block_start}")
    return "".join(stripped), blocks


def reinsert_assertions(stripped: str, blocks: list[AssertionBlock]) -> str:
    lines = iter(stripped.splitlines(keepends=True))
    out: list[str] = []
    position = 1
    for block in sorted(blocks, key=lambda b: b.start_line):
        while position < block.start_line:
            out.append(next(lines))
            position += 1
        out.extend(block.lines)
        position += len(block.lines)
    out.extend(lines)
    return "".join(out)


def enable_single_block(source: str, index: int) -> str:
    """Source with exactly one assertion block retained, all others removed."""
    stripped, blocks = strip_assertions(source)
    if not 1 <= index <= len(blocks):
        raise AssertionFormatError(f"no assertion block {index} (source has {len(blocks)})")
    target = blocks[index - 1]
    # positions shift up by the lines of the earlier blocks that stay removed
    offset = sum(len(b.lines) for b in blocks if b.index < index)
    adjusted = AssertionBlock(
        index=1,
        start_line=target.start_line - offset,
        end_line=target.end_line - offset,
        lines=target.lines,
    )
    return reinsert_assertions(stripped, [adjusted])


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------

def _variant_source(source: str, mode: str | tuple[str, int]) -> tuple[str, dict[int, int]]:
    """The script text to execute plus a map of variant block index -> original."""
    if mode == "all_assertions":
        _, blocks = strip_assertions(source)
        return source, {b.index: b.index for b in blocks}
    if mode == "stripped":
        stripped, _ = strip_assertions(source)
        return stripped, {}
    if isinstance(mode, tuple) and mode[0] == "single":
        index = mode[1]
        return enable_single_block(source, index), {1: index}
    raise ValueError(f"unknown run mode {mode!r}")


def _find_failed_block(
    executed: str, script_name: str, stderr: str, index_map: dict[int, int]
) -> int | None:
    if not index_map or "AssertionError" not in stderr:
        return None
    _, blocks = strip_assertions(executed)
    line = None
    for match in _TRACE_LINE_RE.finditer(stderr):
        if Path(match.group(1)).name == script_name:
            line = int(match.group(2))
    if line is None:
        return None
    for block in blocks:
        if block.start_line <= line <= block.end_line:
            return index_map.get(block.index)
    return None


def run_task(task: TaskArtifact, batch: Batch, mode: str | tuple[str, int] = "all_assertions") -> RunOutcome:
    """Run the task script on one batch in an isolated temp directory."""
    source = task.source()
    executed, index_map = _variant_source(source, mode)
    script_name = Path(task.script_path).name
    with tempfile.TemporaryDirectory(prefix="taskdv-run-") as tmp:
        tmp_path = Path(tmp)
        script_file = tmp_path / script_name
        script_file.write_text(executed, encoding="utf-8")
        batch_file = tmp_path / f"{batch.id}.csv"
        write_csv(batch.data, batch_file)
        argv = [
            part.format(script=str(script_file), batch=str(batch_file))
            for part in task.interpreter_command
        ]
        try:
            proc = subprocess.run(
                argv,
                capture_output=True,
                text=True,
                timeout=task.timeout,
                cwd=tmp,
            )
        except subprocess.TimeoutExpired as exc:
            stdout = exc.stdout.decode() if isinstance(exc.stdout, bytes) else (exc.stdout or "")
            stderr = exc.stderr.decode() if isinstance(exc.stderr, bytes) else (exc.stderr or "")
            return RunOutcome(-1, True, None, stdout, stderr)
        except FileNotFoundError:
            raise EnvironmentError_(f"interpreter not found: {argv[0]}")
    failed_block = None
    if proc.returncode != 0:
        failed_block = _find_failed_block(executed, script_name, proc.stderr, index_map)
    return RunOutcome(proc.returncode, False, failed_block, proc.stdout, proc.stderr)


def label_batch(task: TaskArtifact, batch: Batch) -> Label:
    """Erroneous iff the assertion-enabled run crashes, times out, or fails."""
    outcome = run_task(task, batch, "all_assertions")
    value = "safe" if outcome.ok else "erroneous"
    return Label(task_id=task.id, batch_id=batch.id, value=value)


def verify_task(task: TaskArtifact, sample: Dataset) -> list[str]:
    """Check that the script runs cleanly with all, none, and each single
    assertion block enabled on the trusted sample; returns defects."""
    defects: list[str] = []
    source = task.source()
    _, blocks = strip_assertions(source)
    sample_batch = Batch(id="sample", data=sample, provenance="clean")
    modes: list[tuple[str, str | tuple[str, int]]] = [
        ("all assertion blocks", "all_assertions"),
        ("assertions stripped", "stripped"),
    ]
    modes.extend((f"only block {b.index}", ("single", b.index)) for b in blocks)
    for description, mode in modes:
        outcome = run_task(task, sample_batch, mode)
        if not outcome.ok:
            detail = outcome.stderr.strip().splitlines()[-1] if outcome.stderr.strip() else "no stderr"
            defects.append(f"{task.id}: failed with {description}: {detail}")
    return defects


# ---------------------------------------------------------------------------
# Decision matrices and metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Decision:
    task_id: str
    batch_id: str
    predicted: str  # pass | reject
    label: str  # safe | erroneous


@dataclass(frozen=True)
class DecisionMatrix:
    decisions: tuple[Decision, ...]

    def __len__(self) -> int:
        return len(self.decisions)


@dataclass(frozen=True)
class Metrics:
    passed_safe: int
    false_alarm: int
    rejected_erroneous: int
    missed: int
    precision: float
    recall: float
    f1: float


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def evaluate(matrix: DecisionMatrix) -> Metrics:
    """Precision/recall/F1 for detecting erroneous batches (reject = positive)."""
    passed_safe = false_alarm = rejected_erroneous = missed = 0
    for d in matrix.decisions:
        if d.label == "safe":
            if d.predicted == "pass":
                passed_safe += 1
            else:
                false_alarm += 1
        else:
            if d.predicted == "reject":
                rejected_erroneous += 1
            else:
                missed += 1
    precision, recall, f1 = _prf(rejected_erroneous, false_alarm, missed)
    return Metrics(passed_safe, false_alarm, rejected_erroneous, missed, precision, recall, f1)


def safe_class_metrics(m: Metrics) -> tuple[float, float, float]:
    """The complementary convention (pass = positive), surfaced in reports."""
    return _prf(m.passed_safe, m.missed, m.false_alarm)


# ---------------------------------------------------------------------------
# Evaluation splits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioSpec:
    train_tasks: tuple[str, ...]
    eval_tasks: tuple[str, ...]
    test_tasks: tuple[str, ...]
    obs_batches: tuple[str, ...]
    new_batches: tuple[str, ...]

    SCENARIOS = ("new_data", "new_tasks", "new_data_new_tasks")

    def decision_pairs(self, scenario: str) -> list[tuple[str, str]]:
        if scenario == "new_data":
            tasks, batches = self.train_tasks + self.eval_tasks, self.new_batches
        elif scenario == "new_tasks":
            tasks, batches = self.test_tasks, self.obs_batches
        elif scenario == "new_data_new_tasks":
            tasks, batches = self.test_tasks, self.new_batches
        else:
            raise ValueError(f"unknown scenario {scenario!r}")
        return [(t, b) for t in tasks for b in batches]


def make_scenarios(task_ids: list[str], batch_ids: list[str], seed: int) -> ScenarioSpec:
    """Split tasks 3:3:4 (train:eval:test) and batches 1:1 (observed:new)."""
    rng = random.Random(seed)
    tasks = list(task_ids)
    batches = list(batch_ids)
    rng.shuffle(tasks)
    rng.shuffle(batches)
    n_train = int(0.3 * len(tasks))
    n_eval = int(0.3 * len(tasks))
    n_obs = len(batches) // 2
    return ScenarioSpec(
        train_tasks=tuple(tasks[:n_train]),
        eval_tasks=tuple(tasks[n_train : n_train + n_eval]),
        test_tasks=tuple(tasks[n_train + n_eval :]),
        obs_batches=tuple(batches[:n_obs]),
        new_batches=tuple(batches[n_obs:]),
    )


# ---------------------------------------------------------------------------
# Constraint-discovery case fixtures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CaseFixture:
    id: str
    sample: Dataset
    task_source: str
    data_to_pass: Dataset
    data_to_reject: Dataset
    ground_truth: str
    hidden_assumption: str


def load_case(directory: str | Path) -> CaseFixture:
    """Case layout: case.json + sample.csv + pass.csv + reject.csv + task.py."""
    import json

    directory = Path(directory)
    meta = json.loads((directory / "case.json").read_text(encoding="utf-8"))
    return CaseFixture(
        id=meta["id"],
        sample=load_table(directory / "sample.csv"),
        task_source=(directory / "task.py").read_text(encoding="utf-8"),
        data_to_pass=load_table(directory / "pass.csv"),
        data_to_reject=load_table(directory / "reject.csv"),
        ground_truth=meta["ground_truth_constraint"],
        hidden_assumption=meta["hidden_assumption"],
    )


def eval_case(fixture: CaseFixture, system) -> tuple[bool, bool]:
    """Two binary decisions: did the system pass the good data and reject the bad?

    `system` maps (sample: Dataset, code: str) -> DataUnitTest.
    """
    from .dsl import evaluate_test

    test = system(fixture.sample, fixture.task_source)
    pass_ok = evaluate_test(test, fixture.data_to_pass).verdict == "pass"
    reject_ok = evaluate_test(test, fixture.data_to_reject).verdict == "reject"
    return pass_ok, reject_ok
