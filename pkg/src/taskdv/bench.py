"""Benchmark manifests and the end-to-end decision protocol.

A manifest (bench.json) lists datasets, each with a clean sample, task
scripts, and the batches to judge. Batch ids resolve, in order, to: the
sample itself (id "clean"), an error config with that id (applied to the
sample on the fly), or a pre-materialized CSV under <sample dir>/batches/.

For every (task, batch) pair the harness computes a ground-truth label by
running the task with assertions enabled, while the generation pipeline
produces a test from the assertion-stripped code and predicts pass/reject.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

from .backend import ChatBackend
from .dsl import DataUnitTest, evaluate_test
from .errorgen import load_config, make_batch
from .errors import ConfigError
from .graph import AssumptionGraph
from .harness import (
    Decision,
    DecisionMatrix,
    Metrics,
    TaskArtifact,
    evaluate,
    label_batch,
    make_scenarios,
    safe_class_metrics,
    strip_assertions,
)
from .pipeline import GenerationStats, Generator, make_context
from .prompts import PromptSet
from .sketches import DEFAULT_SKETCH_SEED
from .tabular import Batch, Dataset, load_table


@dataclass(frozen=True)
class BenchDataset:
    name: str
    sample_path: str
    tasks: tuple[TaskArtifact, ...]
    batch_ids: tuple[str, ...]
    error_config_paths: tuple[str, ...] = ()


@dataclass(frozen=True)
class BenchManifest:
    root: Path
    datasets: tuple[BenchDataset, ...]

    def all_task_ids(self) -> list[str]:
        return [t.id for ds in self.datasets for t in ds.tasks]


def load_manifest(path: str | Path) -> BenchManifest:
    path = Path(path)
    payload = json.loads(path.read_text(encoding="utf-8"))
    datasets = []
    for ds in payload["datasets"]:
        tasks = tuple(
            TaskArtifact(
                id=t["id"],
                script_path=str(path.parent / t["script"]),
                timeout=t.get("timeout", 60.0),
            )
            for t in ds["tasks"]
        )
        datasets.append(
            BenchDataset(
                name=ds["name"],
                sample_path=ds["sample"],
                tasks=tasks,
                batch_ids=tuple(ds["batches"]),
                error_config_paths=tuple(ds.get("error_configs", ())),
            )
        )
    ids = [t.id for d in datasets for t in d.tasks]
    if len(set(ids)) != len(ids):
        raise ConfigError("task ids must be unique across the manifest")
    return BenchManifest(root=path.parent, datasets=tuple(datasets))


def materialize_batches(manifest: BenchManifest, ds: BenchDataset) -> tuple[Dataset, list[Batch]]:
    sample = load_table(manifest.root / ds.sample_path)
    configs = {}
    for rel in ds.error_config_paths:
        cfg = load_config(manifest.root / rel)
        configs[cfg.id] = cfg
    batches: list[Batch] = []
    for batch_id in ds.batch_ids:
        if batch_id == "clean":
            batches.append(Batch(id="clean", data=sample, provenance="clean"))
        elif batch_id in configs:
            batches.append(make_batch(sample, configs[batch_id]))
        else:
            csv_path = (manifest.root / ds.sample_path).parent / "batches" / f"{batch_id}.csv"
            if not csv_path.exists():
                raise ConfigError(f"batch {batch_id!r}: no error config and no file {csv_path}")
            batches.append(Batch(id=batch_id, data=load_table(csv_path), provenance="file"))
    return sample, batches


@dataclass
class BenchResult:
    matrix: DecisionMatrix
    metrics: Metrics
    per_dataset: dict[str, Metrics]
    tests: dict[str, DataUnitTest] = field(default_factory=dict)
    graphs: dict[str, AssumptionGraph] = field(default_factory=dict)
    stats: dict[str, GenerationStats] = field(default_factory=dict)


def run_bench(
    manifest: BenchManifest,
    backend: ChatBackend,
    prompts: PromptSet | None = None,
    scenario: str | None = None,
    split_seed: int = 7,
    histogram_threshold: int = 50,
    sketch_seed: int = DEFAULT_SKETCH_SEED,
    parallelism: int = 4,
) -> BenchResult:
    generator = Generator(backend, prompts, parallelism=parallelism, sketch_seed=sketch_seed)
    decisions: list[Decision] = []
    per_dataset: dict[str, Metrics] = {}
    result = BenchResult(DecisionMatrix(()), evaluate(DecisionMatrix(())), {})

    for ds in manifest.datasets:
        sample, batches = materialize_batches(manifest, ds)
        wanted: set[tuple[str, str]] | None = None
        if scenario is not None:
            spec = make_scenarios([t.id for t in ds.tasks], [b.id for b in batches], split_seed)
            wanted = set(spec.decision_pairs(scenario))
        ds_decisions: list[Decision] = []
        for task in ds.tasks:
            stripped, _ = strip_assertions(task.source())
            ctx = make_context(
                task.id,
                stripped,
                sample,
                histogram_threshold=histogram_threshold,
                sketch_seed=sketch_seed,
                source_name=Path(task.script_path).name,
            )
            test, graph, stats = generator.generate_unit_test(ctx)
            result.tests[task.id] = test
            result.graphs[task.id] = graph
            result.stats[task.id] = stats
            for batch in batches:
                if wanted is not None and (task.id, batch.id) not in wanted:
                    continue
                label = label_batch(task, batch)
                report = evaluate_test(test, batch.data, batch.id, sketch_seed)
                ds_decisions.append(
                    Decision(
                        task_id=task.id,
                        batch_id=batch.id,
                        predicted=report.verdict,
                        label=label.value,
                    )
                )
        per_dataset[ds.name] = evaluate(DecisionMatrix(tuple(ds_decisions)))
        decisions.extend(ds_decisions)

    matrix = DecisionMatrix(tuple(decisions))
    result.matrix = matrix
    result.metrics = evaluate(matrix)
    result.per_dataset = per_dataset
    return result


class PipelineRunner:
    """Bridges SIFTA to the generation pipeline over one manifest dataset."""

    def __init__(
        self,
        backend: ChatBackend,
        tasks: dict[str, TaskArtifact],
        sample: Dataset,
        batches: dict[str, Batch],
        parallelism: int = 4,
        sketch_seed: int = DEFAULT_SKETCH_SEED,
        histogram_threshold: int = 50,
    ):
        self.backend = backend
        self.tasks = tasks
        self.sample = sample
        self.batches = batches
        self.parallelism = parallelism
        self.sketch_seed = sketch_seed
        self.histogram_threshold = histogram_threshold
        self._sources = {
            tid: strip_assertions(t.source())[0] for tid, t in tasks.items()
        }

    def generate(self, prompts: PromptSet, task_id: str):
        generator = Generator(
            self.backend, prompts, parallelism=self.parallelism, sketch_seed=self.sketch_seed
        )
        ctx = make_context(
            task_id,
            self._sources[task_id],
            self.sample,
            histogram_threshold=self.histogram_threshold,
            sketch_seed=self.sketch_seed,
            source_name=Path(self.tasks[task_id].script_path).name,
        )
        test, graph, _stats = generator.generate_unit_test(ctx)
        return test, graph

    def evaluate(self, prompts: PromptSet, test: DataUnitTest, task_id: str, batch_id: str):
        return evaluate_test(test, self.batches[batch_id].data, batch_id, self.sketch_seed)

    def task_source(self, task_id: str) -> str:
        return self._sources[task_id]


# ---------------------------------------------------------------------------
# Delimited and JSON reports
# ---------------------------------------------------------------------------

def render_decisions_csv(matrix: DecisionMatrix) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["task_id", "batch_id", "predicted", "label"])
    for d in matrix.decisions:
        writer.writerow([d.task_id, d.batch_id, d.predicted, d.label])
    return buf.getvalue()


def _metrics_payload(m: Metrics) -> dict:
    safe_precision, safe_recall, safe_f1 = safe_class_metrics(m)
    return {
        "counts": {
            "passed_safe": m.passed_safe,
            "false_alarm": m.false_alarm,
            "rejected_erroneous": m.rejected_erroneous,
            "missed": m.missed,
        },
        "erroneous_class": {"precision": m.precision, "recall": m.recall, "f1": m.f1},
        "safe_class": {"precision": safe_precision, "recall": safe_recall, "f1": safe_f1},
    }


def render_metrics_json(result: BenchResult) -> str:
    payload = {
        "overall": _metrics_payload(result.metrics),
        "datasets": {name: _metrics_payload(m) for name, m in result.per_dataset.items()},
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
