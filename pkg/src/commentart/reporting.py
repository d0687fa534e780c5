"""Leaderboard reports comparing runs, with human rows merged in."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

from .runner import RunRecord, load_run

DISCRIMINATIVE_COLUMNS = ("accuracy", "top2_accuracy", "ndcg", "ema")
GENERATIVE_COLUMNS = (
    "bleu_1",
    "bleu_2",
    "dist_1",
    "rouge_l",
    "weo",
    "tag_accuracy",
    "judge_composite_raw",
    "judge_composite_norm",
)
UNAVAILABLE = "—"


def _row_name(record: RunRecord) -> str:
    model = record.config.get("model", record.run_id)
    mode = record.config.get("mode", "")
    if mode and mode not in ("discriminative", "baseline"):
        return f"{model} ({mode})"
    return str(model)


def _cell(value) -> str:
    if value is None:
        return UNAVAILABLE
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def _record_cells(aggregates: dict) -> dict:
    cells = {}
    for column in DISCRIMINATIVE_COLUMNS + GENERATIVE_COLUMNS:
        cells[column] = aggregates.get(column)
    return cells


def build_report(records: Sequence[RunRecord], human: "RunRecord | None" = None) -> dict:
    """Structured leaderboard: one row per run, fixed column schema,
    per-dimension slices attached per row."""
    rows = []
    for record in records:
        rows.append(
            {
                "name": _row_name(record),
                "run_id": record.run_id,
                "kind": record.kind,
                "baseline": record.baseline,
                "cells": _record_cells(record.aggregates),
                "by_dimension": record.aggregates.get("by_dimension", {}),
            }
        )
    if human is not None:
        # the merged human record nests aggregates per task kind
        for kind, agg in sorted(human.aggregates.items()):
            if kind in ("per_annotator",) or not isinstance(agg, dict):
                continue
            rows.append(
                {
                    "name": "Human",
                    "run_id": human.run_id,
                    "kind": kind,
                    "baseline": False,
                    "cells": _record_cells(agg),
                    "by_dimension": agg.get("by_dimension", {}),
                }
            )
    return {"rows": rows}


def report_markdown(report: dict) -> str:
    columns = list(DISCRIMINATIVE_COLUMNS + GENERATIVE_COLUMNS)
    lines = [
        "| run | kind | " + " | ".join(columns) + " |",
        "|---|---|" + "|".join(["---"] * len(columns)) + "|",
    ]
    for row in report["rows"]:
        cells = [_cell(row["cells"].get(c)) for c in columns]
        lines.append(f"| {row['name']} | {row['kind']} | " + " | ".join(cells) + " |")
    return "\n".join(lines)


def report_runs(run_dirs: Sequence[str | Path], human: "RunRecord | None" = None) -> dict:
    records = []
    for run_dir in run_dirs:
        path = Path(run_dir)
        if not (path / "record.json").exists():
            raise FileNotFoundError(f"no run record under {path}")
        records.append(load_run(path))
    return build_report(records, human=human)


def save_report(report: dict, path: str | Path) -> None:
    p = Path(path)
    if p.suffix == ".md":
        p.write_text(report_markdown(report) + "\n", "utf-8")
    else:
        p.write_text(json.dumps(report, ensure_ascii=False, indent=2, sort_keys=True), "utf-8")
