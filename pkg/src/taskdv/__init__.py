"""Task-aware data unit test generation and validation toolkit."""

__version__ = "0.1.0"

from .tabular import Batch, ColumnVector, Dataset, ValueKind, load_table, write_csv
from .profiler import ColumnProfile, profile_data
from .dsl import (
    Constraint,
    DataUnitTest,
    TestReport,
    evaluate_constraint,
    evaluate_test,
    parse_constraint,
    precheck_constraint,
    render_constraint,
)
from .graph import Assumption, AssumptionGraph, CodeSpan, annotate_code, strip_annotations
from .pipeline import GenerationContext, Generator, make_context, suggest_task_agnostic
from .prompts import PromptSet, default_prompt_set
from .errorgen import ErrorConfig, ErrorOperator, apply_config, catalog
from .harness import (
    DecisionMatrix,
    Metrics,
    TaskArtifact,
    evaluate,
    label_batch,
    run_task,
    strip_assertions,
    verify_task,
)
from .sifta import ObservationSet, Observation, SiftaConfig, optimize

__all__ = [
    "Assumption",
    "AssumptionGraph",
    "Batch",
    "CodeSpan",
    "ColumnProfile",
    "ColumnVector",
    "Constraint",
    "DataUnitTest",
    "Dataset",
    "DecisionMatrix",
    "ErrorConfig",
    "ErrorOperator",
    "GenerationContext",
    "Generator",
    "Metrics",
    "Observation",
    "ObservationSet",
    "PromptSet",
    "SiftaConfig",
    "TaskArtifact",
    "TestReport",
    "ValueKind",
    "annotate_code",
    "apply_config",
    "catalog",
    "default_prompt_set",
    "evaluate",
    "evaluate_constraint",
    "evaluate_test",
    "label_batch",
    "load_table",
    "make_context",
    "optimize",
    "parse_constraint",
    "precheck_constraint",
    "profile_data",
    "render_constraint",
    "run_task",
    "strip_annotations",
    "strip_assertions",
    "suggest_task_agnostic",
    "verify_task",
    "write_csv",
]
