"""Experiment report records and their JSON/CSV persistence.

A report serializes to a JSON document with keys ``config``, ``per_epoch``,
``bias_stats``, ``final_relevance_path`` and ``summary``; the per-epoch loss
curves are additionally written as a CSV sibling (same stem, ``.csv``).
Serialization is deterministic, so identical runs produce byte-identical
files.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .metrics import BiasStats

__all__ = ["EpochRecord", "ExperimentReport", "write_report", "load_report", "report_to_dict"]

CSV_COLUMNS = ("epoch", "alpha_t", "train_loss", "test_loss", "train_acc", "test_acc", "mean_max_prob")


@dataclass
class EpochRecord:
    epoch: int
    alpha_t: float
    train_loss: float
    test_loss: float
    train_acc: float
    test_acc: float
    mean_max_prob: float


@dataclass
class ExperimentReport:
    """Everything one training run (or a seed-aggregated family) produced.

    ``per_epoch`` and ``bias_stats`` come from the base seed's run;
    ``final_test_acc_mean``/``std`` aggregate the final test accuracy over
    all seeds in ``seeds`` (std is the sample estimate, zero for one seed).
    """

    config: dict
    per_epoch: list[EpochRecord]
    bias_stats: BiasStats
    final_relevance_path: str | None = None
    final_test_acc_mean: float = 0.0
    final_test_acc_std: float = 0.0
    seeds: list[int] = field(default_factory=list)


def report_to_dict(report: ExperimentReport) -> dict:
    return {
        "config": dict(report.config),
        "per_epoch": [
            {col: getattr(rec, col) for col in CSV_COLUMNS} for rec in report.per_epoch
        ],
        "bias_stats": {
            "mean": [float(x) for x in report.bias_stats.mean],
            "std": [float(x) for x in report.bias_stats.std],
            "batch_count": report.bias_stats.batch_count,
        },
        "final_relevance_path": report.final_relevance_path,
        "summary": {
            "final_test_acc_mean": report.final_test_acc_mean,
            "final_test_acc_std": report.final_test_acc_std,
            "seeds": list(report.seeds),
        },
    }


def _report_from_dict(doc: dict) -> ExperimentReport:
    stats = BiasStats(
        np.asarray(doc["bias_stats"]["mean"], dtype=np.float64),
        np.asarray(doc["bias_stats"]["std"], dtype=np.float64),
        int(doc["bias_stats"]["batch_count"]),
    )
    records = [EpochRecord(**{col: rec[col] for col in CSV_COLUMNS}) for rec in doc["per_epoch"]]
    summary = doc.get("summary", {})
    return ExperimentReport(
        config=doc["config"],
        per_epoch=records,
        bias_stats=stats,
        final_relevance_path=doc.get("final_relevance_path"),
        final_test_acc_mean=summary.get("final_test_acc_mean", 0.0),
        final_test_acc_std=summary.get("final_test_acc_std", 0.0),
        seeds=list(summary.get("seeds", [])),
    )


def write_report(report: ExperimentReport, path) -> tuple[Path, Path]:
    """Write the JSON document plus the loss-curve CSV; returns both paths."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
    csv_path = path.with_suffix(".csv")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for rec in report.per_epoch:
            fh.write(",".join(repr(getattr(rec, col)) for col in CSV_COLUMNS) + "\n")
    return path, csv_path


def load_report(path) -> ExperimentReport:
    with open(path, encoding="utf-8") as fh:
        return _report_from_dict(json.load(fh))
