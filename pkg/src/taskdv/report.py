"""Figure rendering for bench and optimization reports.

Figures are written next to the delimited/JSON output; they are a visual
aid and deliberately excluded from byte-stability guarantees.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import Metrics

_COUNT_FIELDS = ("passed_safe", "false_alarm", "rejected_erroneous", "missed")


def render_metrics_figure(metrics_by_name: Mapping[str, Metrics], path: str | Path) -> None:
    """Grouped decision counts per dataset plus the erroneous-class scores."""
    names = list(metrics_by_name)
    fig, (ax_counts, ax_scores) = plt.subplots(1, 2, figsize=(10, 4))

    width = 0.8 / max(len(names), 1)
    for i, name in enumerate(names):
        m = metrics_by_name[name]
        values = [getattr(m, f) for f in _COUNT_FIELDS]
        positions = [j + i * width for j in range(len(_COUNT_FIELDS))]
        ax_counts.bar(positions, values, width=width, label=name)
    ax_counts.set_xticks([j + 0.4 - width / 2 for j in range(len(_COUNT_FIELDS))])
    ax_counts.set_xticklabels([f.replace("_", "\n") for f in _COUNT_FIELDS], fontsize=8)
    ax_counts.set_ylabel("decisions")
    ax_counts.set_title("decision counts")
    ax_counts.legend(fontsize=8)

    score_fields = ("precision", "recall", "f1")
    for i, name in enumerate(names):
        m = metrics_by_name[name]
        values = [getattr(m, f) for f in score_fields]
        positions = [j + i * width for j in range(len(score_fields))]
        ax_scores.bar(positions, values, width=width, label=name)
    ax_scores.set_xticks([j + 0.4 - width / 2 for j in range(len(score_fields))])
    ax_scores.set_xticklabels(score_fields)
    ax_scores.set_ylim(0.0, 1.05)
    ax_scores.set_title("erroneous-class scores")

    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_optimization_figure(log: Sequence[Mapping], path: str | Path) -> None:
    """Eval-score trace over charged proposals, one marker per acceptance."""
    steps = []
    scores = []
    for i, record in enumerate(log):
        if record.get("accepted") and record.get("eval_score") is not None:
            steps.append(i)
            scores.append(record["eval_score"])
    fig, ax = plt.subplots(figsize=(6, 4))
    if steps:
        ax.plot(steps, scores, marker="o")
    else:
        ax.text(0.5, 0.5, "no charged proposals", ha="center", va="center", transform=ax.transAxes)
    ax.set_xlabel("proposal")
    ax.set_ylabel("eval mean failure precision")
    ax.set_title("prompt optimization trace")
    ax.set_ylim(-0.05, 1.05)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
