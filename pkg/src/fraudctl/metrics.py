"""Detection metrics: ROC/AUC, confusion counts, and per-model reports.

Fraud is the positive class throughout. Scores follow the package-wide
convention that higher means more anomalous; AUC is computed by a grouped
threshold sweep with trapezoidal integration, which equals the normalized
pairwise-comparison statistic with ties credited one half.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass
class RocCurve:
    """(fpr, tpr, threshold) points in threshold-descending order, plus the AUC."""

    points: list[tuple[float, float, float]]
    auc: float


@dataclass
class MetricsReport:
    model_name: str
    auc: float
    precision: float
    recall: float
    f1: float
    confusion: ConfusionMatrix
    threshold: float
    rule: str
    degenerate_precision: bool

    def to_dict(self) -> dict:
        return {
            "model": self.model_name,
            "auc": self.auc,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "confusion": {
                "tp": self.confusion.tp,
                "fp": self.confusion.fp,
                "tn": self.confusion.tn,
                "fn": self.confusion.fn,
            },
            "threshold": self.threshold,
            "rule": self.rule,
            "degenerate_precision": self.degenerate_precision,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", "utf-8")


def _check_scores_labels(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if scores.ndim != 1 or labels.ndim != 1 or scores.shape != labels.shape:
        raise DataError(
            f"scores and labels must be equal-length vectors, got "
            f"{scores.shape} and {labels.shape}"
        )
    if not np.all(np.isfinite(scores)):
        raise DataError("scores contain non-finite values")
    if not np.isin(labels, (0, 1)).all():
        raise DataError("labels must be 0 or 1")
    return scores, labels.astype(np.int64)


def roc_auc(scores, labels) -> RocCurve:
    """ROC curve over unique-score thresholds (predict fraud when score >= t).

    Tied scores collapse into a single threshold step. Starts at (0, 0) with
    an infinite threshold sentinel and ends at (1, 1) at the minimum score.
    """
    scores, labels = _check_scores_labels(scores, labels)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUC undefined: both classes must be present")

    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order]
    points: list[tuple[float, float, float]] = [(0.0, 0.0, math.inf)]
    tp = fp = 0
    i = 0
    while i < len(s):
        j = i
        while j < len(s) and s[j] == s[i]:  # group ties into one step
            j += 1
        tp += int(y[i:j].sum())
        fp += (j - i) - int(y[i:j].sum())
        points.append((fp / n_neg, tp / n_pos, float(s[i])))
        i = j
    return RocCurve(points=points, auc=_trapezoid(points))


def _trapezoid(points) -> float:
    auc = 0.0
    for (fpr0, tpr0, _), (fpr1, tpr1, _) in zip(points[:-1], points[1:]):
        auc += (fpr1 - fpr0) * (tpr1 + tpr0) / 2.0
    return auc


def confusion(decisions, labels) -> ConfusionMatrix:
    """Counts at a fixed decision, fraud as the positive class."""
    decisions = np.asarray(decisions).astype(bool)
    labels = np.asarray(labels)
    if decisions.shape != labels.shape or decisions.ndim != 1:
        raise DataError(
            f"decisions and labels must be equal-length vectors, got "
            f"{decisions.shape} and {labels.shape}"
        )
    if not np.isin(labels, (0, 1)).all():
        raise DataError("labels must be 0 or 1")
    pos = labels == 1
    return ConfusionMatrix(
        tp=int(np.sum(decisions & pos)),
        fp=int(np.sum(decisions & ~pos)),
        tn=int(np.sum(~decisions & ~pos)),
        fn=int(np.sum(~decisions & pos)),
    )


def precision_recall_f1(cm: ConfusionMatrix) -> tuple[float, float, float, bool]:
    """(precision, recall, f1, degenerate_precision) from confusion counts.

    With no positive predictions, precision is reported as 0.0 with the
    degenerate flag set instead of NaN, keeping reports machine-readable.
    """
    degenerate = (cm.tp + cm.fp) == 0
    precision = 0.0 if degenerate else cm.tp / (cm.tp + cm.fp)
    recall = cm.tp / (cm.tp + cm.fn) if (cm.tp + cm.fn) > 0 else 0.0
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f1, degenerate


def report_from_decisions(
    scores, labels, decisions, model_name: str, rule: str, threshold: float
) -> MetricsReport:
    """Build a full report from scores plus precomputed binary decisions."""
    scores, labels = _check_scores_labels(scores, labels)
    curve = roc_auc(scores, labels)
    cm = confusion(decisions, labels)
    precision, recall, f1, degenerate = precision_recall_f1(cm)
    return MetricsReport(
        model_name=model_name, auc=curve.auc, precision=precision, recall=recall,
        f1=f1, confusion=cm, threshold=float(threshold), rule=rule,
        degenerate_precision=degenerate,
    )


def contamination_threshold(scores, contamination: float) -> float:
    """Score-space cut flagging the ceil(c*N) highest scores via score > t.

    Boundary ties are all flagged, so the flagged count can exceed the
    target only through exact ties.
    """
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 1 or scores.size == 0:
        raise DataError("scores must be a nonempty vector")
    if not 0.0 < contamination < 1.0:
        raise ConfigError(f"contamination must be in (0, 1), got {contamination}")
    k = min(len(scores), int(math.ceil(contamination * len(scores))))
    ordered = np.sort(scores)[::-1]
    boundary = ordered[k - 1]
    below = ordered[ordered < boundary]
    return float((boundary + below[0]) / 2.0) if below.size else float(boundary - 1.0)


def metrics_report(
    scores, labels, threshold_policy: tuple[str, float], model_name: str = "model"
) -> MetricsReport:
    """Report at a policy-chosen threshold.

    threshold_policy is ("fixed", t), flagging score > t, or
    ("contamination", c), flagging the ceil(c*N) highest scores with boundary
    ties all flagged.
    """
    scores, labels = _check_scores_labels(scores, labels)
    kind, value = threshold_policy
    if kind == "fixed":
        threshold = float(value)
    elif kind == "contamination":
        threshold = contamination_threshold(scores, value)
    else:
        raise ConfigError(
            f"unknown threshold policy {kind!r}; valid: fixed, contamination"
        )
    decisions = scores > threshold
    rule = "fixed_score" if kind == "fixed" else "high_score"
    return report_from_decisions(scores, labels, decisions, model_name, rule, threshold)


def comparison_table(reports: list[MetricsReport]) -> str:
    """Aligned plain-text table, one row per model: AUC, precision, recall, F1."""
    if not reports:
        raise DataError("no reports to tabulate")
    headers = ["Model", "AUC", "Precision", "Recall", "F1-Score"]
    rows = [
        [
            r.model_name,
            f"{r.auc:.4f}",
            f"{r.precision:.4f}",
            f"{r.recall:.4f}",
            f"{r.f1:.4f}",
        ]
        for r in reports
    ]
    widths = [max(len(h), *(len(row[i]) for row in rows)) for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
        "  ".join("-" * w for w in widths),
    ]
    lines += ["  ".join(c.ljust(widths[i]) for i, c in enumerate(row)) for row in rows]
    return "\n".join(lines) + "\n"


def export_roc(curve: RocCurve, path: str | Path) -> None:
    """Write the curve as CSV columns fpr, tpr, threshold."""
    if not curve.points:
        raise DataError("cannot export an empty ROC curve")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fpr", "tpr", "threshold"])
        for fpr, tpr, thr in curve.points:
            writer.writerow([repr(float(fpr)), repr(float(tpr)), repr(float(thr))])


def import_roc(path: str | Path) -> RocCurve:
    """Read an exported curve back and re-integrate its AUC."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such ROC file: {path}")
    points = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["fpr", "tpr", "threshold"]:
            raise DataError(f"{path}: unexpected ROC header {header}")
        for row in reader:
            points.append((float(row[0]), float(row[1]), float(row[2])))
    if not points:
        raise DataError(f"{path}: empty ROC curve")
    return RocCurve(points=points, auc=_trapezoid(points))
