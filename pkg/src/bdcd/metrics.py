"""Confusion matrix, classification report, and training-curve export.

The confusion matrix is counts with true class on rows and predicted class
on columns; TP/FP/FN/TN per class are derived from it.  Any 0/0 ratio in
the report is recorded as 0 and flags the class as degenerate.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import LabeledImage
from .errors import EmptyDatasetError, InvalidParameterError, InvalidShapeError
from .model import ModelSpec, forward_dataset
from .train import EpochMetrics


@dataclass
class EvalReport:
    confusion: np.ndarray            # int64 [K, K], rows = true class
    precision: np.ndarray            # float64 [K]
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray              # int64 [K], per-class true counts
    accuracy: float
    degenerate: np.ndarray           # bool [K], true where some ratio was 0/0
    class_labels: tuple[str, ...] = ()


def classification_report(confusion: np.ndarray,
                          class_labels: Sequence[str] = ()) -> EvalReport:
    """Per-class precision/recall/F1 plus overall accuracy from counts."""
    cm = np.asarray(confusion)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1]:
        raise InvalidShapeError(f"confusion matrix must be square, got {cm.shape}")
    if np.any(cm < 0) or not np.issubdtype(cm.dtype, np.integer):
        raise InvalidParameterError("confusion matrix must hold nonnegative integers")
    k = cm.shape[0]
    tp = np.diag(cm).astype(np.int64)
    fp = cm.sum(axis=0).astype(np.int64) - tp
    fn = cm.sum(axis=1).astype(np.int64) - tp
    precision = np.zeros(k)
    recall = np.zeros(k)
    f1 = np.zeros(k)
    degenerate = np.zeros(k, dtype=bool)
    for c in range(k):
        if tp[c] + fp[c] > 0:
            precision[c] = tp[c] / (tp[c] + fp[c])
        else:
            degenerate[c] = True
        if tp[c] + fn[c] > 0:
            recall[c] = tp[c] / (tp[c] + fn[c])
        else:
            degenerate[c] = True
        if precision[c] + recall[c] > 0:
            f1[c] = 2 * precision[c] * recall[c] / (precision[c] + recall[c])
        else:
            degenerate[c] = True
    total = int(cm.sum())
    accuracy = float(tp.sum() / total) if total else 0.0
    return EvalReport(cm.astype(np.int64), precision, recall, f1,
                      cm.sum(axis=1).astype(np.int64), accuracy, degenerate,
                      tuple(class_labels))


def evaluate(model: ModelSpec, dataset: Sequence[LabeledImage],
             batch_size: int = 32) -> EvalReport:
    """Predict every item and tabulate the confusion matrix."""
    if not dataset:
        raise EmptyDatasetError("cannot evaluate an empty dataset")
    k = len(model.class_labels)
    probs, labels = forward_dataset(model, dataset, batch_size)
    predicted = probs.argmax(axis=1)
    cm = np.zeros((k, k), dtype=np.int64)
    np.add.at(cm, (labels, predicted), 1)
    return classification_report(cm, model.class_labels)


def report_as_dict(report: EvalReport) -> dict:
    labels = report.class_labels or tuple(str(i) for i in range(len(report.precision)))
    return {
        "accuracy": report.accuracy,
        "confusion": report.confusion.tolist(),
        "classes": [
            {
                "label": labels[c],
                "precision": float(report.precision[c]),
                "recall": float(report.recall[c]),
                "f1": float(report.f1[c]),
                "support": int(report.support[c]),
                "degenerate": bool(report.degenerate[c]),
            }
            for c in range(len(labels))
        ],
    }


def report_as_text(report: EvalReport) -> str:
    labels = report.class_labels or tuple(str(i) for i in range(len(report.precision)))
    width = max(5, max(len(s) for s in labels))
    lines = [f"{'class':>{width}}  precision  recall  f1      support"]
    for c, name in enumerate(labels):
        flag = " *" if report.degenerate[c] else ""
        lines.append(f"{name:>{width}}  {report.precision[c]:9.4f}  {report.recall[c]:6.4f}"
                     f"  {report.f1[c]:6.4f}  {int(report.support[c]):7d}{flag}")
    lines.append(f"accuracy: {report.accuracy:.4f} over {int(report.support.sum())} samples")
    if report.degenerate.any():
        lines.append("* undefined ratio (0/0) reported as 0")
    return "\n".join(lines)


def report_as_csv(report: EvalReport) -> str:
    labels = report.class_labels or tuple(str(i) for i in range(len(report.precision)))
    rows = ["class,precision,recall,f1,support"]
    for c, name in enumerate(labels):
        rows.append(f"{name},{report.precision[c]:.4f},{report.recall[c]:.4f},"
                    f"{report.f1[c]:.4f},{int(report.support[c])}")
    rows.append(f"accuracy,{report.accuracy:.4f},,,{int(report.support.sum())}")
    return "\n".join(rows) + "\n"


CURVES_HEADER = ("epoch", "train_accuracy", "train_loss", "val_accuracy", "val_loss")


def export_curves(metrics: Sequence[EpochMetrics], path) -> None:
    """Write accuracy/loss curves as CSV, one 4-decimal row per epoch."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CURVES_HEADER) + "\n")
        for m in metrics:
            fh.write(f"{m.epoch},{m.train_accuracy:.4f},{m.train_loss:.4f},"
                     f"{m.val_accuracy:.4f},{m.val_loss:.4f}\n")


def read_curves(path) -> list[EpochMetrics]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(EpochMetrics(int(row["epoch"]), float(row["train_accuracy"]),
                                    float(row["train_loss"]), float(row["val_accuracy"]),
                                    float(row["val_loss"])))
    return out


def read_metrics_jsonl(path) -> list[EpochMetrics]:
    """Parse the per-epoch JSON-lines training log."""
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            out.append(EpochMetrics(int(rec["epoch"]), float(rec["train_accuracy"]),
                                    float(rec["train_loss"]), float(rec["val_accuracy"]),
                                    float(rec["val_loss"])))
    return out
