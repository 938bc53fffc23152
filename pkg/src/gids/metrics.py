"""Per-class confusion counts and precision / recall / F1 reporting.

Zero-division convention: precision (or recall) is 0 when its
denominator is 0, and F1 is 0 when precision + recall is 0. This keeps
macro-F1 defined even for classes absent from the evaluation data.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DimensionError
from .validation import as_label_vector


@dataclass
class ConfusionMatrix:
    """One-vs-rest counts per class; every row satisfies TP+FP+TN+FN == total."""

    tp: np.ndarray
    fp: np.ndarray
    tn: np.ndarray
    fn: np.ndarray
    class_count: int

    @property
    def total(self):
        return int(self.tp[0] + self.fp[0] + self.tn[0] + self.fn[0]) if self.class_count else 0


def confusion(preds, truths, class_count):
    """Build one-vs-rest confusion counts from parallel label lists."""
    preds = as_label_vector(preds, "preds")
    truths = as_label_vector(truths, "truths")
    if preds.shape[0] != truths.shape[0]:
        raise DimensionError(
            f"length mismatch: {preds.shape[0]} predictions vs {truths.shape[0]} truths"
        )
    if class_count < 1:
        raise DataError("class_count must be >= 1")
    for name, arr in (("preds", preds), ("truths", truths)):
        if arr.size and arr.max() >= class_count:
            raise DataError(f"{name} contains label >= class_count ({class_count})")

    n = preds.shape[0]
    tp = np.zeros(class_count, dtype=np.int64)
    fp = np.zeros(class_count, dtype=np.int64)
    fn = np.zeros(class_count, dtype=np.int64)
    for c in range(class_count):
        pc = preds == c
        tc = truths == c
        tp[c] = np.sum(pc & tc)
        fp[c] = np.sum(pc & ~tc)
        fn[c] = np.sum(~pc & tc)
    tn = n - tp - fp - fn
    return ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn, class_count=class_count)


@dataclass
class MetricsReport:
    """Per-label precision/recall/F1 plus the unweighted macro-F1.

    `role` tags which side of the controller comparison the report
    belongs to ("pm_h" for hybrid-only training, "pm_p" with pending
    samples included).
    """

    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    macro_f1: float
    role: str | None = field(default=None)

    @property
    def class_count(self):
        return len(self.f1)

    def to_rows(self):
        return [
            (c, float(self.precision[c]), float(self.recall[c]),
             float(self.f1[c]), int(self.support[c]))
            for c in range(self.class_count)
        ]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["label", "precision", "recall", "f1", "support"])
            for row in self.to_rows():
                w.writerow([row[0], repr(row[1]), repr(row[2]), repr(row[3]), row[4]])

    def to_json_dict(self):
        return {
            "role": self.role,
            "macro_f1": float(self.macro_f1),
            "labels": [
                {"label": c, "precision": p, "recall": r, "f1": f, "support": s}
                for c, p, r, f, s in self.to_rows()
            ],
        }

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")


def _safe_div(num, den):
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den > 0)
    return out


def class_metrics(cm):
    """Precision, recall, and F1 per class from confusion counts."""
    precision = _safe_div(cm.tp, cm.tp + cm.fp)
    recall = _safe_div(cm.tp, cm.tp + cm.fn)
    f1 = _safe_div(2.0 * precision * recall, precision + recall)
    return precision, recall, f1


def macro_f1(f1_scores):
    """Unweighted mean of per-label F1, treating all labels equally."""
    f1_scores = np.asarray(f1_scores, dtype=np.float64)
    if f1_scores.size == 0:
        raise DataError("macro_f1 needs at least one label")
    return float(np.mean(f1_scores))


def evaluate_predictions(preds, truths, class_count, role=None):
    """Confusion -> per-class metrics -> full report in one call."""
    cm = confusion(preds, truths, class_count)
    precision, recall, f1 = class_metrics(cm)
    support = cm.tp + cm.fn
    return MetricsReport(
        precision=precision,
        recall=recall,
        f1=f1,
        support=support,
        macro_f1=macro_f1(f1),
        role=role,
    )
