"""Operator-facing command line.

Commands never mutate their inputs; all artifacts land under --out. Exit
codes: 64 for configuration problems, 70 for runtime failures, and for
`validate` 0/1/2 = pass/reject/constraint-error. Options resolve as
flag > TASKDV_* environment variable > --config TOML value > default.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import bench as bench_mod
from .backend import CachingBackend, ChatBackend, LiveBackend, MockBackend
from .dsl import evaluate_test, load_test
from .errorgen import load_config, make_batch
from .errors import ConfigError, TaskdvError
from .harness import TaskArtifact, label_batch, strip_assertions
from .pipeline import Generator, make_context, suggest_task_agnostic
from .profiler import profile_data, write_profiles
from .prompts import PromptSet, default_prompt_set
from .sifta import ObservationSet, Observation, SiftaConfig, optimize, write_log
from .sketches import DEFAULT_SKETCH_SEED
from .tabular import Batch, load_table, save_batch

EXIT_CONFIG = 64
EXIT_RUNTIME = 70


def _fail(exc: Exception, code: int) -> None:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    click.echo(json.dumps(payload), err=True)
    sys.exit(code)


def _load_toml(path: str | None) -> dict:
    if not path:
        return {}
    try:
        import tomllib  # Python >= 3.11
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        with open(path, "rb") as handle:
            return tomllib.load(handle)
    except (OSError, ValueError) as exc:
        _fail(ConfigError(f"cannot read config {path}: {exc}"), EXIT_CONFIG)
        raise AssertionError("unreachable")


def _resolve(flag_value, env_name: str, config: dict, key: str, default):
    if flag_value is not None:
        return flag_value
    env = os.environ.get(env_name)
    if env is not None:
        return type(default)(env) if default is not None else env
    if key in config:
        return config[key]
    return default


def _make_backend(config: dict, mock, base_url, model, token_env, cache) -> ChatBackend:
    mock = _resolve(mock, "TASKDV_MOCK", config, "mock", None)
    base_url = _resolve(base_url, "TASKDV_BASE_URL", config, "base_url", None)
    model = _resolve(model, "TASKDV_MODEL", config, "model", "default-model")
    token_env = _resolve(token_env, "TASKDV_TOKEN_ENV", config, "token_env", "TASKDV_API_TOKEN")
    cache = _resolve(cache, "TASKDV_CACHE", config, "cache", None)
    if mock and base_url:
        raise ConfigError("--mock and --base-url are mutually exclusive")
    if mock:
        inner: ChatBackend = MockBackend(mock)
    elif base_url:
        inner = LiveBackend(base_url=base_url, model=model, token_env_var=token_env)
    else:
        raise ConfigError("select a backend: --mock TRANSCRIPT_DIR or --base-url URL")
    return CachingBackend(inner, cache)


def _backend_options(fn):
    fn = click.option("--cache", type=click.Path(), default=None, help="Response cache directory.")(fn)
    fn = click.option("--token-env", default=None, help="Env var holding the API token.")(fn)
    fn = click.option("--model", default=None, help="Model name for the live backend.")(fn)
    fn = click.option("--base-url", default=None, help="Chat-completion endpoint base URL.")(fn)
    fn = click.option("--mock", type=click.Path(exists=True), default=None, help="Transcript directory; runs offline.")(fn)
    return fn


def _load_prompts(path: str | None) -> PromptSet:
    return PromptSet.load(path) if path else default_prompt_set()


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="TOML config file.")
@click.pass_context
def main(ctx, config_path):
    """Task-aware data unit test toolkit."""
    ctx.obj = _load_toml(config_path)


@main.command()
@click.argument("data", type=click.Path(exists=True))
@click.option("--out", "-o", type=click.Path(), default="out", show_default=True)
@click.option("--histogram-threshold", type=int, default=None)
@click.option("--sketch-seed", type=int, default=None)
@click.pass_obj
def profile(config, data, out, histogram_threshold, sketch_seed):
    """Profile a CSV table into profiles/<name>.json."""
    try:
        threshold = _resolve(histogram_threshold, "TASKDV_HISTOGRAM_THRESHOLD", config, "histogram_threshold", 50)
        seed = _resolve(sketch_seed, "TASKDV_SKETCH_SEED", config, "sketch_seed", DEFAULT_SKETCH_SEED)
        dataset = load_table(data)
        profiles = profile_data(dataset, threshold, seed)
        out_dir = Path(out) / "profiles"
        out_dir.mkdir(parents=True, exist_ok=True)
        target = out_dir / f"{Path(data).stem}.json"
        write_profiles(profiles, target, threshold, seed)
        click.echo(str(target))
    except TaskdvError as exc:
        _fail(exc, EXIT_RUNTIME)


@main.command()
@click.option("--task", "task_script", type=click.Path(exists=True), required=True, help="Task script (assertions allowed; they are stripped).")
@click.option("--sample", type=click.Path(exists=True), required=True)
@click.option("--task-id", default=None, help="Defaults to the script stem.")
@click.option("--prompts", "prompts_path", type=click.Path(exists=True), default=None)
@click.option("--out", "-o", type=click.Path(), default="out", show_default=True)
@click.option("--parallelism", type=int, default=None)
@_backend_options
@click.pass_obj
def generate(config, task_script, sample, task_id, prompts_path, out, parallelism, mock, base_url, model, token_env, cache):
    """Generate a data unit test and assumption graph for one task."""
    try:
        backend = _make_backend(config, mock, base_url, model, token_env, cache)
    except ConfigError as exc:
        _fail(exc, EXIT_CONFIG)
    try:
        task_id = task_id or Path(task_script).stem
        source = Path(task_script).read_text(encoding="utf-8")
        stripped, _blocks = strip_assertions(source)
        dataset = load_table(sample)
        ctx = make_context(task_id, stripped, dataset, source_name=Path(task_script).name)
        workers = _resolve(parallelism, "TASKDV_PARALLELISM", config, "parallelism", 4)
        generator = Generator(backend, _load_prompts(prompts_path), parallelism=workers)
        test, graph, stats = generator.generate_unit_test(ctx)
        out_path = Path(out)
        (out_path / "tests").mkdir(parents=True, exist_ok=True)
        (out_path / "graphs").mkdir(parents=True, exist_ok=True)
        from .dsl import save_test

        save_test(test, out_path / "tests" / f"{task_id}.json")
        graph.save(out_path / "graphs" / f"{task_id}.json")
        click.echo(
            json.dumps(
                {
                    "task_id": task_id,
                    "constraints": len(test.constraints),
                    "generated": stats.generated,
                    "non_executable": stats.non_executable,
                    "discarded": stats.discarded,
                },
                sort_keys=True,
            )
        )
    except TaskdvError as exc:
        _fail(exc, EXIT_RUNTIME)


@main.command()
@click.option("--test", "test_path", type=click.Path(exists=True), required=True)
@click.option("--batch", "batch_path", type=click.Path(exists=True), required=True)
def validate(test_path, batch_path):
    """Evaluate a test on a batch; exit 0 pass, 1 reject, 2 constraint error."""
    try:
        test = load_test(test_path)
        data = load_table(batch_path)
        report = evaluate_test(test, data, Path(batch_path).stem)
        payload = {
            "test_id": report.test_id,
            "batch_id": report.batch_id,
            "verdict": report.verdict,
            "outcomes": [
                {
                    "constraint_id": o.constraint_id,
                    "status": o.status,
                    "measured": o.measured,
                    "message": o.message,
                }
                for o in report.outcomes
            ],
        }
        click.echo(json.dumps(payload, sort_keys=True))
        if any(o.status == "error" for o in report.outcomes):
            sys.exit(2)
        sys.exit(0 if report.verdict == "pass" else 1)
    except TaskdvError as exc:
        _fail(exc, EXIT_RUNTIME)


@main.command()
@click.option("--sample", type=click.Path(exists=True), required=True)
@click.option("--error-config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--out", "-o", type=click.Path(), default="out", show_default=True)
def inject(sample, config_path, out):
    """Corrupt a sample into a batch per an error config (seeded, repeatable)."""
    try:
        dataset = load_table(sample)
        cfg = load_config(config_path)
        batch = make_batch(dataset, cfg)
        batch_dir = Path(out) / "batches"
        save_batch(batch_dir, batch)
        click.echo(str(batch_dir / f"{batch.id}.csv"))
    except ConfigError as exc:
        _fail(exc, EXIT_CONFIG)
    except TaskdvError as exc:
        _fail(exc, EXIT_RUNTIME)


@main.command()
@click.option("--task", "task_script", type=click.Path(exists=True), required=True)
@click.option("--task-id", default=None)
@click.option("--timeout", type=float, default=None)
@click.argument("batches", type=click.Path(exists=True), nargs=-1, required=True)
@click.option("--out", "-o", type=click.Path(), default="out", show_default=True)
@click.pass_obj
def label(config, task_script, task_id, timeout, batches, out):
    """Run the task (assertions enabled) on batches; write ground-truth labels."""
    try:
        task_id = task_id or Path(task_script).stem
        seconds = _resolve(timeout, "TASKDV_TIMEOUT", config, "timeout", 60.0)
        task = TaskArtifact(id=task_id, script_path=task_script, timeout=seconds)
        labels = []
        for batch_path in batches:
            batch = Batch(id=Path(batch_path).stem, data=load_table(batch_path), provenance="file")
            result = label_batch(task, batch)
            labels.append({"task_id": result.task_id, "batch_id": result.batch_id, "value": result.value})
        out_dir = Path(out) / "labels"
        out_dir.mkdir(parents=True, exist_ok=True)
        target = out_dir / f"{task_id}.json"
        target.write_text(json.dumps(labels, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        click.echo(str(target))
    except TaskdvError as exc:
        _fail(exc, EXIT_RUNTIME)


@main.command()
@click.option("--manifest", type=click.Path(exists=True), required=True)
@click.option("--dataset", "dataset_name", default=None, help="Dataset to optimize on (default: first).")
@click.option("--prompts", "prompts_path", type=click.Path(exists=True), default=None)
@click.option("--name", default="optimized", show_default=True)
@click.option("--rounds", type=int, default=None)
@click.option("--budget", type=int, default=None)
@click.option("--n-train", type=int, default=None)
@click.option("--n-eval", type=int, default=None)
@click.option("--n-fb", type=int, default=None)
@click.option("--patience", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--split-seed", type=int, default=None)
@click.option("--out", "-o", type=click.Path(), default="out", show_default=True)
@_backend_options
@click.pass_obj
def optimize_cmd(config, manifest, dataset_name, prompts_path, name, rounds, budget, n_train, n_eval, n_fb, patience, seed, split_seed, out, mock, base_url, model, token_env, cache):
    """Adapt the generation prompts from observed task outcomes."""
    try:
        backend = _make_backend(config, mock, base_url, model, token_env, cache)
        sifta_cfg = SiftaConfig(
            n_round=_resolve(rounds, "TASKDV_ROUNDS", config, "rounds", 3),
            b_eval=_resolve(budget, "TASKDV_BUDGET", config, "budget", 15),
            n_train=_resolve(n_train, "TASKDV_N_TRAIN", config, "n_train", 3),
            n_fb=_resolve(n_fb, "TASKDV_N_FB", config, "n_fb", 2),
            n_eval=_resolve(n_eval, "TASKDV_N_EVAL", config, "n_eval", 3),
            early_stop_patience=_resolve(patience, "TASKDV_PATIENCE", config, "patience", 20),
            seed=_resolve(seed, "TASKDV_SEED", config, "seed", 1),
        )
    except (ConfigError, ValueError) as exc:
        _fail(exc, EXIT_CONFIG)
    try:
        mf = bench_mod.load_manifest(manifest)
        names = [ds.name for ds in mf.datasets]
        if dataset_name is None:
            dataset_name = names[0]
        if dataset_name not in names:
            raise ConfigError(f"dataset {dataset_name!r} not in manifest ({names})")
        ds = next(d for d in mf.datasets if d.name == dataset_name)
        split = _resolve(split_seed, "TASKDV_SPLIT_SEED", config, "split_seed", 7)

        sample, batches = bench_mod.materialize_batches(mf, ds)
        from .harness import make_scenarios

        spec = make_scenarios([t.id for t in ds.tasks], [b.id for b in batches], split)
        batch_by_id = {b.id: b for b in batches}
        task_by_id = {t.id: t for t in ds.tasks}

        def observe(task_ids):
            observations = []
            for tid in task_ids:
                for bid in spec.obs_batches:
                    lab = label_batch(task_by_id[tid], batch_by_id[bid])
                    observations.append(
                        Observation(tid, bid, 1 if lab.value == "safe" else 0)
                    )
            return tuple(observations)

        observations = ObservationSet(train=observe(spec.train_tasks), eval=observe(spec.eval_tasks))
        runner = bench_mod.PipelineRunner(backend, task_by_id, sample, batch_by_id)
        result = optimize(sifta_cfg, observations, _load_prompts(prompts_path), runner, backend)

        out_path = Path(out)
        (out_path / "prompts").mkdir(parents=True, exist_ok=True)
        result.prompts.save(out_path / "prompts" / f"{name}.json")
        write_log(result.log, out_path / "sifta_log.jsonl")
        from .report import render_optimization_figure

        render_optimization_figure(result.log, out_path / "optimization.png")
        click.echo(
            json.dumps(
                {
                    "prompts": str(out_path / "prompts" / f"{name}.json"),
                    "eval_score": result.eval_score,
                    "charged_evals": result.charged_evals,
                    "proposals": len(result.log),
                },
                sort_keys=True,
            )
        )
    except ConfigError as exc:
        _fail(exc, EXIT_CONFIG)
    except TaskdvError as exc:
        _fail(exc, EXIT_RUNTIME)


@main.command(name="bench")
@click.option("--manifest", type=click.Path(exists=True), required=True)
@click.option("--scenario", type=click.Choice(["new_data", "new_tasks", "new_data_new_tasks"]), default=None)
@click.option("--prompts", "prompts_path", type=click.Path(exists=True), default=None)
@click.option("--split-seed", type=int, default=None)
@click.option("--parallelism", type=int, default=None)
@click.option("--out", "-o", type=click.Path(), default="out", show_default=True)
@_backend_options
@click.pass_obj
def bench_cmd(config, manifest, scenario, prompts_path, split_seed, parallelism, out, mock, base_url, model, token_env, cache):
    """Label, generate, and judge every (task, batch) pair in a manifest."""
    try:
        backend = _make_backend(config, mock, base_url, model, token_env, cache)
    except ConfigError as exc:
        _fail(exc, EXIT_CONFIG)
    try:
        mf = bench_mod.load_manifest(manifest)
        result = bench_mod.run_bench(
            mf,
            backend,
            _load_prompts(prompts_path),
            scenario=scenario,
            split_seed=_resolve(split_seed, "TASKDV_SPLIT_SEED", config, "split_seed", 7),
            parallelism=_resolve(parallelism, "TASKDV_PARALLELISM", config, "parallelism", 4),
        )
        out_path = Path(out)
        out_path.mkdir(parents=True, exist_ok=True)
        (out_path / "decisions.csv").write_text(
            bench_mod.render_decisions_csv(result.matrix), encoding="utf-8"
        )
        (out_path / "metrics.json").write_text(
            bench_mod.render_metrics_json(result), encoding="utf-8"
        )
        (out_path / "tests").mkdir(exist_ok=True)
        from .dsl import save_test

        for task_id, test in result.tests.items():
            save_test(test, out_path / "tests" / f"{task_id}.json")
        from .report import render_metrics_figure

        figures = {"overall": result.metrics}
        figures.update(result.per_dataset)
        render_metrics_figure(figures, out_path / "metrics.png")
        click.echo(json.dumps({"decisions": len(result.matrix), "f1": result.metrics.f1}, sort_keys=True))
    except ConfigError as exc:
        _fail(exc, EXIT_CONFIG)
    except TaskdvError as exc:
        _fail(exc, EXIT_RUNTIME)


@main.command()
@click.option("--sample", type=click.Path(exists=True), required=True)
@click.option("--out", "-o", type=click.Path(), default="out", show_default=True)
@click.pass_obj
def suggest(config, sample, out):
    """Task-agnostic heuristic test from the data profile alone."""
    try:
        dataset = load_table(sample)
        threshold = _resolve(None, "TASKDV_HISTOGRAM_THRESHOLD", config, "histogram_threshold", 50)
        profiles = profile_data(dataset, threshold)
        test = suggest_task_agnostic(profiles, Path(sample).stem)
        out_dir = Path(out) / "tests"
        out_dir.mkdir(parents=True, exist_ok=True)
        from .dsl import save_test

        target = out_dir / f"{test.task_id}.json"
        save_test(test, target)
        click.echo(str(target))
    except TaskdvError as exc:
        _fail(exc, EXIT_RUNTIME)


if __name__ == "__main__":
    main()
