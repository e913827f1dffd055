"""Report serialization: CSV for analysis, JSON for tooling, text for eyes.

Unavailable sweep cells (sequential mode below five windows) are written as
"-" in CSV and text, null in JSON.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict
from pathlib import Path

from .postprocess import LatencyReport, SweepReport

__all__ = [
    "sweep_table",
    "write_sweep_csv",
    "write_sweep_json",
    "write_confusion_csv",
    "write_per_class_csv",
    "latency_to_dict",
    "write_latency_json",
    "write_latency_csv",
]


def _cell(value: float | None) -> str:
    return "-" if value is None else f"{value:.1f}"


def sweep_table(report: SweepReport) -> str:
    """Accuracy table shaped like the published sweeps: rows per structure."""
    header = ["Structure"] + [str(m) for m in report.lengths]
    body = [
        [row.name] + [_cell(row.accuracy[m]) for m in report.lengths] for row in report.rows
    ]
    widths = [max(len(line[i]) for line in [header] + body) for i in range(len(header))]
    lines = []
    for line in [header] + body:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip())
    return "\n".join(lines)


def write_sweep_csv(path: str | os.PathLike, report: SweepReport) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["structure", "arch", "input_mode"] + [str(m) for m in report.lengths])
        for row in report.rows:
            writer.writerow(
                [row.name, row.arch, row.input_mode]
                + [_cell(row.accuracy[m]) for m in report.lengths]
            )


def sweep_to_dict(report: SweepReport) -> dict:
    return {
        "lengths_ms": report.lengths,
        "rows": [
            {
                "name": row.name,
                "arch": row.arch,
                "input_mode": row.input_mode,
                "accuracy_pct": {str(m): row.accuracy[m] for m in report.lengths},
            }
            for row in report.rows
        ],
        "per_class_length_ms": report.per_class_length,
        "per_class_pct": {
            name: {str(k): v for k, v in table.items()} for name, table in report.per_class.items()
        },
        "confusion": {name: mat.tolist() for name, mat in report.confusion.items()},
    }


def write_sweep_json(path: str | os.PathLike, report: SweepReport) -> None:
    Path(path).write_text(
        json.dumps(sweep_to_dict(report), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def write_confusion_csv(path: str | os.PathLike, confusion) -> None:
    """C x C counts; row = true class, column = predicted class."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        c = len(confusion)
        writer.writerow(["true\\predicted"] + list(range(c)))
        for label, row in enumerate(confusion):
            writer.writerow([label] + [int(v) for v in row])


def write_per_class_csv(path: str | os.PathLike, per_class: dict[int, float]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class", "accuracy_pct"])
        for label in sorted(per_class):
            writer.writerow([label, f"{per_class[label]:.4f}"])


def latency_to_dict(report: LatencyReport) -> dict:
    return {
        "feature_extraction_ms": asdict(report.feature_extraction),
        "classification_ms": asdict(report.classification),
        "iterations": report.iterations,
        "windows_per_iteration": report.windows_per_iteration,
        "decisions_per_iteration": report.decisions_per_iteration,
    }


def write_latency_json(path: str | os.PathLike, report: LatencyReport) -> None:
    Path(path).write_text(
        json.dumps(latency_to_dict(report), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def write_latency_csv(path: str | os.PathLike, report: LatencyReport) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stage", "mean_ms", "p50_ms", "p95_ms"])
        for stage, summary in (
            ("feature_extraction", report.feature_extraction),
            ("classification", report.classification),
        ):
            writer.writerow(
                [stage, f"{summary.mean_ms:.6f}", f"{summary.p50_ms:.6f}", f"{summary.p95_ms:.6f}"]
            )
