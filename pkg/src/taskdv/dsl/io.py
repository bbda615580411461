"""Test artifact serialization: tests/<task_id>.json."""

from __future__ import annotations

import json
from pathlib import Path

from .ast import DataUnitTest
from .parser import parse_constraint
from .render import render_constraint


def render_test_json(t: DataUnitTest) -> str:
    payload = {
        "id": t.id,
        "task_id": t.task_id,
        "constraints": [
            {
                "id": c.id,
                "text": render_constraint(c),
                "assumption_ids": list(c.assumption_ids),
            }
            for c in t.constraints
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def save_test(t: DataUnitTest, path: str | Path) -> None:
    Path(path).write_text(render_test_json(t), encoding="utf-8")


def load_test(path: str | Path) -> DataUnitTest:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    constraints = tuple(
        parse_constraint(entry["text"]).with_id(
            entry["id"], tuple(entry.get("assumption_ids", ()))
        )
        for entry in payload["constraints"]
    )
    return DataUnitTest(id=payload["id"], task_id=payload["task_id"], constraints=constraints)
