from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    mcc: float

    def as_dict(self) -> dict[str, float]:
        return {
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "mcc": self.mcc,
        }


def confusion_matrix(preds: np.ndarray, labels: np.ndarray, n_classes: int) -> np.ndarray:
    """Rows are true classes, columns predicted classes."""
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (labels, preds), 1)
    return cm


def mcc_from_confusion(cm: np.ndarray) -> float:
    """Multiclass Matthews correlation; 0 when the denominator vanishes."""
    cm = cm.astype(np.float64)
    s = cm.sum()
    c = np.trace(cm)
    t = cm.sum(axis=1)
    p = cm.sum(axis=0)
    num = c * s - float(p @ t)
    den = math.sqrt((s * s - float(p @ p)) * (s * s - float(t @ t)))
    if den == 0.0:
        return 0.0
    return float(num / den)


def classification_metrics(preds: Sequence[int] | np.ndarray, labels: Sequence[int] | np.ndarray,
                           n_classes: int) -> Metrics:
    """Accuracy, macro precision/recall/F1 and multiclass MCC.

    Classes that appear in neither ``preds`` nor ``labels`` are left out of the
    macro averages. Per-class 0/0 ratios count as 0.
    """
    preds = np.asarray(preds, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if preds.shape != labels.shape or preds.ndim != 1:
        raise ValueError(f"preds and labels must be 1-D of equal length, got {preds.shape} vs {labels.shape}")
    if preds.size == 0:
        raise ValueError("cannot score an empty prediction vector")
    for name, arr in (("preds", preds), ("labels", labels)):
        if arr.min() < 0 or arr.max() >= n_classes:
            raise ValueError(f"{name} contain ids outside [0, {n_classes})")

    cm = confusion_matrix(preds, labels, n_classes)
    tp = np.diag(cm).astype(np.float64)
    true_count = cm.sum(axis=1).astype(np.float64)
    pred_count = cm.sum(axis=0).astype(np.float64)
    present = (true_count + pred_count) > 0

    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(pred_count > 0, tp / pred_count, 0.0)
        recall = np.where(true_count > 0, tp / true_count, 0.0)
        denom = precision + recall
        f1 = np.where(denom > 0, 2 * precision * recall / denom, 0.0)

    return Metrics(
        accuracy=float(tp.sum() / preds.size),
        macro_precision=float(precision[present].mean()),
        macro_recall=float(recall[present].mean()),
        macro_f1=float(f1[present].mean()),
        mcc=mcc_from_confusion(cm),
    )


def minmax_normalize(values: Sequence[float], lo: float = 0.01, hi: float = 1.0) -> list[float]:
    """Linearly map ``values`` onto [lo, hi]; a constant list maps to ``hi``."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("cannot normalize an empty list")
    if not np.all(np.isfinite(arr)):
        raise ValueError("values must be finite")
    vmin, vmax = arr.min(), arr.max()
    if vmax == vmin:
        return [float(hi)] * arr.size
    out = lo + (hi - lo) * (arr - vmin) / (vmax - vmin)
    return [float(v) for v in np.clip(out, lo, hi)]
