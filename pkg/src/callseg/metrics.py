"""Confusion matrices and per-class precision / recall / F1.

Rows are true classes, columns predicted. For class c:
TP = cm[c][c], FP = column sum - TP, FN = row sum - TP, and

    precision = TP / (TP + FP)
    recall    = TP / (TP + FN)
    f1        = 2 * precision * recall / (precision + recall)

with the convention that any score whose denominator is zero is 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InputError


def confusion(preds, truths, n_classes: int) -> np.ndarray:
    """Count matrix counts[truth][pred] over paired label lists."""
    preds = np.asarray(preds, dtype=np.int64)
    truths = np.asarray(truths, dtype=np.int64)
    if preds.shape != truths.shape or preds.ndim != 1:
        raise InputError(f"prediction/truth lists disagree: {preds.shape} vs {truths.shape}")
    if preds.size and (
        preds.min() < 0 or preds.max() >= n_classes or truths.min() < 0 or truths.max() >= n_classes
    ):
        raise InputError(f"labels out of range for {n_classes} classes")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (truths, preds), 1)
    return cm


@dataclass
class ClassScores:
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray

    def to_dict(self) -> dict:
        return {
            "precision": [float(x) for x in self.precision],
            "recall": [float(x) for x in self.recall],
            "f1": [float(x) for x in self.f1],
        }


def _safe_div(num, den):
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den > 0)
    return out


def class_scores(cm: np.ndarray) -> ClassScores:
    """Per-class precision, recall and F1 from a confusion matrix."""
    cm = np.asarray(cm)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1]:
        raise InputError(f"confusion matrix must be square, got {cm.shape}")
    tp = np.diag(cm).astype(np.float64)
    precision = _safe_div(tp, cm.sum(axis=0))
    recall = _safe_div(tp, cm.sum(axis=1))
    f1 = _safe_div(2.0 * precision * recall, precision + recall)
    return ClassScores(precision=precision, recall=recall, f1=f1)


def accuracy(cm: np.ndarray) -> float:
    cm = np.asarray(cm)
    total = cm.sum()
    if total <= 0:
        raise InputError("empty confusion matrix")
    return float(np.trace(cm) / total)


def confusion_to_csv(cm: np.ndarray, class_names) -> str:
    """Plot-ready CSV: header row of predicted classes, one row per true class."""
    lines = ["true\\pred," + ",".join(class_names)]
    for name, row in zip(class_names, np.asarray(cm)):
        lines.append(name + "," + ",".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def scores_to_json(cm: np.ndarray, class_names) -> str:
    scores = class_scores(cm)
    payload = {
        "accuracy": accuracy(cm),
        "classes": list(class_names),
        "confusion": [[int(v) for v in row] for row in np.asarray(cm)],
        "scores": scores.to_dict(),
    }
    return json.dumps(payload, indent=2, sort_keys=True)
