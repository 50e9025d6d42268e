"""Evaluation metrics: mask overlap, parameter errors, classification scores."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AlignmentError, ValidationError
from .segmentation import Mask, Segment
from .shapes import DIAGNOSES, Diagnosis, ShapeParams


def dice(m: Mask, m_hat: Mask) -> float:
    """Overlap score 2|A.B| / (|A|^2 + |B|^2); two empty masks agree (1.0)."""
    a = np.asarray(m.bits, dtype=bool)
    b = np.asarray(m_hat.bits, dtype=bool)
    if len(a) != len(b):
        raise AlignmentError(f"mask lengths differ ({len(a)} vs {len(b)})")
    denom = int(a.sum()) + int(b.sum())
    if denom == 0:
        return 1.0
    return 2.0 * int((a & b).sum()) / denom


def segment_param_mse(true_seg: Segment, pred_seg: Segment) -> float:
    """Squared error of the segment endpoints, in seconds^2."""
    return (true_seg.start_s - pred_seg.start_s) ** 2 + (true_seg.end_s - pred_seg.end_s) ** 2


def shape_param_mse(true_params: ShapeParams, pred_params: ShapeParams) -> float:
    """Squared L2 distance between full parameter vectors of one family."""
    if len(true_params.tau) != len(pred_params.tau) or len(true_params.pi) != len(pred_params.pi):
        raise ValidationError("parameter vectors belong to different shape families")
    t = np.asarray(true_params.tau + true_params.pi)
    p = np.asarray(pred_params.tau + pred_params.pi)
    return float(np.sum((t - p) ** 2))


def shape_fit_mse(true_amplitude: np.ndarray, fitted_shape: np.ndarray, m: Mask) -> float:
    """Mean squared difference between shape and true amplitude over the mask."""
    a = np.asarray(true_amplitude, dtype=np.float64)
    h = np.asarray(fitted_shape, dtype=np.float64)
    if len(a) != len(h) or len(a) != len(m.bits):
        raise AlignmentError("series and mask must share one grid")
    if not m.bits.any():
        raise ValidationError("shape fit MSE over an empty mask is undefined")
    r = h[m.bits] - a[m.bits]
    return float(np.mean(r * r))


@dataclass
class EvalResult:
    """Aggregated corpus evaluation."""

    accuracy: float
    sensitivity: dict[Diagnosis, float | None]
    specificity: dict[Diagnosis, float | None]
    confusion: np.ndarray  # rows true, cols predicted, canonical order
    mean_dice: float | None = None
    mean_param_mse: float | None = None
    mean_shape_param_mse: float | None = None
    mean_shape_fit_mse: float | None = None
    n_cases: int = 0
    n_missed_segments: int = 0
    extras: dict = field(default_factory=dict)


def classify_metrics(pairs: list[tuple[Diagnosis, Diagnosis]]) -> EvalResult:
    """Accuracy, one-vs-rest sensitivity/specificity and the confusion matrix.

    Sensitivity is TP/(TP+FN) and specificity TN/(TN+FP); classes with no
    true (resp. no negative) examples report None.
    """
    if not pairs:
        raise ValidationError("classify_metrics needs at least one (true, predicted) pair")
    idx = {y: i for i, y in enumerate(DIAGNOSES)}
    confusion = np.zeros((5, 5), dtype=np.int64)
    for true, pred in pairs:
        confusion[idx[true], idx[pred]] += 1
    total = confusion.sum()
    accuracy = float(np.trace(confusion)) / float(total)
    sensitivity: dict[Diagnosis, float | None] = {}
    specificity: dict[Diagnosis, float | None] = {}
    for y, i in idx.items():
        tp = confusion[i, i]
        fn = confusion[i, :].sum() - tp
        fp = confusion[:, i].sum() - tp
        tn = total - tp - fn - fp
        sensitivity[y] = float(tp / (tp + fn)) if (tp + fn) > 0 else None
        specificity[y] = float(tn / (tn + fp)) if (tn + fp) > 0 else None
    return EvalResult(
        accuracy=accuracy, sensitivity=sensitivity, specificity=specificity,
        confusion=confusion, n_cases=int(total),
    )


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def write_eval_csv(result: EvalResult, path: str | Path, label: str = "default") -> None:
    """One-row CSV of the aggregate metrics."""
    cols = ["label", "n_cases", "accuracy"]
    vals = [label, result.n_cases, result.accuracy]
    for y in DIAGNOSES:
        cols.append(f"sensitivity_{y.value}")
        vals.append(result.sensitivity.get(y))
    for y in DIAGNOSES:
        cols.append(f"specificity_{y.value}")
        vals.append(result.specificity.get(y))
    cols += ["mean_dice", "mean_param_mse", "mean_shape_param_mse", "mean_shape_fit_mse", "n_missed_segments"]
    vals += [result.mean_dice, result.mean_param_mse, result.mean_shape_param_mse,
             result.mean_shape_fit_mse, result.n_missed_segments]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        writer.writerow([_fmt(v) for v in vals])


def write_confusion_csv(result: EvalResult, path: str | Path) -> None:
    """Confusion matrix CSV: rows are true labels, columns predictions."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["true\\pred"] + [y.value for y in DIAGNOSES])
        for i, y in enumerate(DIAGNOSES):
            writer.writerow([y.value] + [int(v) for v in result.confusion[i]])
