"""Campaign metrics: selected-class frequencies, accuracy/mIoU, CSV reports.

Shares are computed over non-ignore classes only (train id 0 never counts).
``lift`` compares a class's share among selected points to its share in the
whole dataset; a lift above 1 means selection favors that class.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import IntegrityError, UsageError
from .journal import JournalEntry
from .lidar_io import IGNORE_ID, LabelSet


@dataclass(frozen=True)
class ClassFrequency:
    class_id: int
    name: str
    selected_count: int
    selected_share: float
    base_share: float
    lift: float  # inf when base_share == 0 and selected_share > 0
    infinite_lift: bool


@dataclass(frozen=True)
class FrequencyReport:
    classes: tuple[ClassFrequency, ...]
    empty: bool

    def rows(self) -> list[tuple]:
        return [
            (c.class_id, c.name, c.selected_count, c.selected_share, c.base_share, c.lift)
            for c in self.classes
        ]


def class_frequencies(
    entries: Iterable[JournalEntry],
    base_labels: dict[str, LabelSet],
    class_names: dict[int, str] | None = None,
) -> FrequencyReport:
    """Per-class counts/shares of journaled labels against the dataset base.

    ``base_labels`` maps scan id -> ground-truth labels for every scan the
    journal may reference; a dangling reference raises IntegrityError.
    """
    entries = list(entries)
    class_count = max((ls.class_count for ls in base_labels.values()), default=0)
    if class_count == 0:
        raise UsageError("base_labels must contain at least one scan")
    selected = np.zeros(class_count + 1, dtype=np.int64)
    for entry in entries:
        if entry.scan_id not in base_labels:
            raise IntegrityError(f"journal references unknown scan {entry.scan_id!r}")
        for lab in entry.revealed_labels:
            selected[lab] += 1
    base = np.zeros(class_count + 1, dtype=np.int64)
    for labels in base_labels.values():
        base += np.bincount(labels.labels, minlength=class_count + 1)[: class_count + 1]

    sel_total = int(selected[1:].sum())
    base_total = int(base[1:].sum())
    names = class_names or {}
    out = []
    for k in range(1, class_count + 1):
        sel_share = selected[k] / sel_total if sel_total else 0.0
        base_share = base[k] / base_total if base_total else 0.0
        if base_share > 0:
            lift, infinite = sel_share / base_share, False
        elif sel_share > 0:
            lift, infinite = float("inf"), True
        else:
            lift, infinite = 0.0, False
        out.append(
            ClassFrequency(
                class_id=k,
                name=names.get(k, f"class_{k}"),
                selected_count=int(selected[k]),
                selected_share=float(sel_share),
                base_share=float(base_share),
                lift=float(lift),
                infinite_lift=infinite,
            )
        )
    return FrequencyReport(classes=tuple(out), empty=(sel_total == 0))


def confusion_matrix(pred: np.ndarray, truth: np.ndarray, class_count: int) -> np.ndarray:
    """(K+1) x (K+1) counts of (truth, pred); ignore-id truth rows excluded."""
    pred = np.asarray(pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if pred.shape != truth.shape:
        raise UsageError(f"length mismatch: pred {pred.shape} vs truth {truth.shape}")
    keep = truth != IGNORE_ID
    pred, truth = pred[keep], truth[keep]
    k = class_count + 1
    counts = np.bincount(truth * k + pred, minlength=k * k)
    return counts.reshape(k, k)


def compute_miou(
    pred: np.ndarray, truth: LabelSet | np.ndarray, class_count: int | None = None
) -> tuple[np.ndarray, float]:
    """Per-class IoU and its mean.

    IoU_k = TP / (TP + FP + FN) over non-ignore truth positions. Classes
    absent from both prediction and truth get NaN and are excluded from the
    mean (partial vocabularies would otherwise drag it to zero).
    """
    if isinstance(truth, LabelSet):
        class_count = truth.class_count
        truth = truth.labels
    if class_count is None:
        raise UsageError("class_count is required when truth is a bare array")
    cm = confusion_matrix(pred, truth, class_count)
    ious = np.full(class_count, np.nan)
    for k in range(1, class_count + 1):
        tp = cm[k, k]
        fp = cm[:, k].sum() - tp
        fn = cm[k, :].sum() - tp
        denom = tp + fp + fn
        if denom > 0:
            ious[k - 1] = tp / denom
    mean = float(np.nanmean(ious)) if not np.isnan(ious).all() else float("nan")
    return ious, mean


def compute_accuracy(pred: np.ndarray, truth: LabelSet | np.ndarray) -> float:
    """Fraction of non-ignore positions predicted correctly."""
    if isinstance(truth, LabelSet):
        truth = truth.labels
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise UsageError(f"length mismatch: pred {pred.shape} vs truth {truth.shape}")
    keep = truth != IGNORE_ID
    if not keep.any():
        return float("nan")
    return float((pred[keep] == truth[keep]).mean())


@dataclass(frozen=True)
class CurvePoint:
    round_index: int
    budget: int  # cumulative labeled points
    metric: str  # accuracy | miou
    value: float


def write_frequencies_csv(report: FrequencyReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["class_id", "name", "selected_count", "selected_share", "base_share", "lift"]
        )
        for row in report.rows():
            writer.writerow([row[0], row[1], row[2], repr(row[3]), repr(row[4]), repr(row[5])])


def write_curve_csv(points: Sequence[CurvePoint], path) -> None:
    ordered = sorted(points, key=lambda p: (p.round_index, p.metric))
    by_metric: dict[str, list[CurvePoint]] = {}
    for p in ordered:
        by_metric.setdefault(p.metric, []).append(p)
    for series in by_metric.values():
        if any(b.budget <= a.budget for a, b in zip(series, series[1:])):
            raise IntegrityError("curve budget must be strictly increasing across rounds")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["round", "budget", "metric", "value"])
        for p in ordered:
            writer.writerow([p.round_index, p.budget, p.metric, repr(p.value)])


def emit_report(
    run_dir,
    frequency_report: FrequencyReport,
    curve: Sequence[CurvePoint],
    summary: dict,
) -> dict[str, Path]:
    """Write frequencies.csv, curve.csv and summary.txt into ``run_dir``.

    Output is deterministic byte for byte for deterministic inputs.
    """
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "frequencies": run_dir / "frequencies.csv",
        "curve": run_dir / "curve.csv",
        "summary": run_dir / "summary.txt",
    }
    write_frequencies_csv(frequency_report, paths["frequencies"])
    write_curve_csv(curve, paths["curve"])
    lines = [f"{key}: {summary[key]}" for key in sorted(summary)]
    if frequency_report.empty:
        lines.append("note: journal is empty; frequency shares are all zero")
    flagged = [c.class_id for c in frequency_report.classes if c.infinite_lift]
    if flagged:
        lines.append(f"note: infinite lift for class ids {flagged} (absent from the base)")
    paths["summary"].write_text("\n".join(lines) + "\n", encoding="utf-8")
    return paths
