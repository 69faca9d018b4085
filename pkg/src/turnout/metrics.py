"""Confusion matrices, one-vs-rest ROC curves and error histograms."""
from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass

import numpy as np


class RocWarning(UserWarning):
    """A class had no positives or no negatives, so its ROC curve was skipped."""


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Rows are true classes, columns predicted classes."""

    counts: np.ndarray
    total: int

    @property
    def k(self) -> int:
        return self.counts.shape[0]

    def __eq__(self, other):
        return isinstance(other, ConfusionMatrix) and np.array_equal(self.counts, other.counts)

    __hash__ = None


def confusion(truths, preds, k: int) -> ConfusionMatrix:
    truths = np.asarray(truths, dtype=np.int64).ravel()
    preds = np.asarray(preds, dtype=np.int64).ravel()
    if truths.shape != preds.shape:
        raise ValueError(f"length mismatch: {truths.size} truths vs {preds.size} predictions")
    for name, arr in (("truth", truths), ("prediction", preds)):
        if arr.size and (arr.min() < 0 or arr.max() >= k):
            raise ValueError(f"{name} class index outside [0, {k})")
    counts = np.bincount(truths * k + preds, minlength=k * k).reshape(k, k)
    counts.setflags(write=False)
    return ConfusionMatrix(counts, int(truths.size))


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise ValueError("accuracy of an empty confusion matrix is undefined")
    return int(np.trace(cm.counts)) / cm.total


def confusion_csv(cm: ConfusionMatrix, labels=None) -> str:
    """Long-format cells: one row per (true, predicted) pair, with row/column percentages."""
    labels = list(labels) if labels is not None else [str(i) for i in range(cm.k)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["true_class", "true_label", "pred_class", "pred_label", "count", "percent_of_total"])
    for i in range(cm.k):
        for j in range(cm.k):
            c = int(cm.counts[i, j])
            pct = 100.0 * c / cm.total if cm.total else 0.0
            w.writerow([i, labels[i], j, labels[j], c, repr(pct)])
    return buf.getvalue()


@dataclass(frozen=True)
class RocCurve:
    points: tuple[tuple[float, float], ...]  # (fpr, tpr)
    auc: float
    class_index: int


def roc(scores, positives, class_index: int = 0) -> RocCurve:
    """ROC by sweeping the threshold down through the distinct scores.

    Tied scores enter the curve together, so each distinct threshold adds one
    point and the trapezoid over a tie block gives half credit per tied pair.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    pos = np.asarray(positives, dtype=bool).ravel()
    if scores.shape != pos.shape:
        raise ValueError(f"length mismatch: {scores.size} scores vs {pos.size} labels")
    n_pos = int(pos.sum())
    n_neg = int(pos.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs at least one positive and one negative sample")
    order = np.argsort(-scores, kind="stable")
    s, p = scores[order], pos[order]
    tp = np.cumsum(p)
    fp = np.cumsum(~p)
    # last index of each block of equal scores
    ends = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    tpr = np.r_[0.0, tp[ends] / n_pos]
    fpr = np.r_[0.0, fp[ends] / n_neg]
    auc = float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1])) / 2.0)
    return RocCurve(tuple(zip(fpr.tolist(), tpr.tolist())), auc, class_index)


def multi_roc(out_acts, truths, k: int) -> list[RocCurve]:
    """One-vs-rest curves, scoring class c by output column c.

    Classes with no positive or no negative sample are skipped with a
    :class:`RocWarning`.
    """
    out_acts = np.asarray(out_acts, dtype=np.float64)
    truths = np.asarray(truths, dtype=np.int64).ravel()
    if out_acts.ndim != 2 or out_acts.shape[1] != k:
        raise ValueError(f"out_acts must have {k} columns, got shape {out_acts.shape}")
    if out_acts.shape[0] != truths.size:
        raise ValueError("out_acts and truths differ in length")
    curves = []
    for c in range(k):
        positives = truths == c
        if positives.all() or not positives.any():
            warnings.warn(f"class {c}: no {'negatives' if positives.all() else 'positives'}; ROC skipped",
                          RocWarning, stacklevel=2)
            continue
        curves.append(roc(out_acts[:, c], positives, c))
    return curves


def roc_csv(curve: RocCurve) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["fpr", "tpr"])
    for fpr, tpr in curve.points:
        w.writerow([repr(fpr), repr(tpr)])
    return buf.getvalue()


@dataclass(frozen=True)
class ErrorHistogram:
    bin_edges: tuple[float, ...]
    counts: dict  # subset name -> tuple of per-bin counts

    @property
    def bin_count(self) -> int:
        return len(self.bin_edges) - 1


def error_histogram(errors: dict, bin_count: int = 20) -> ErrorHistogram:
    """Uniform bins over the pooled range of all subsets' errors.

    Bins are left-closed and right-open except the last, which is closed, so
    the maximum lands in the last bin. A degenerate range is widened to
    ``value +- 0.5``.
    """
    if bin_count < 1:
        raise ValueError(f"bin_count must be >= 1, got {bin_count}")
    arrays = {name: np.asarray(v, dtype=np.float64).ravel() for name, v in errors.items()}
    pooled = np.concatenate(list(arrays.values())) if arrays else np.empty(0)
    if pooled.size == 0:
        raise ValueError("error_histogram needs at least one error value")
    lo, hi = float(pooled.min()), float(pooled.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    edges = lo + (hi - lo) * np.arange(bin_count + 1) / bin_count
    edges[0], edges[-1] = lo, hi
    if np.any(np.diff(edges) <= 0):  # range narrower than bin_count ulps
        mid = (lo + hi) / 2.0
        edges = mid - 0.5 + np.arange(bin_count + 1) / bin_count
    counts = {}
    for name, arr in arrays.items():
        idx = np.searchsorted(edges, arr, side="right") - 1
        idx = np.clip(idx, 0, bin_count - 1)
        counts[name] = tuple(int(c) for c in np.bincount(idx, minlength=bin_count))
    return ErrorHistogram(tuple(edges.tolist()), counts)


def histogram_csv(hist: ErrorHistogram) -> str:
    names = list(hist.counts)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bin", "left_edge", "right_edge", *names])
    for b in range(hist.bin_count):
        w.writerow([b, repr(hist.bin_edges[b]), repr(hist.bin_edges[b + 1]), *(hist.counts[n][b] for n in names)])
    return buf.getvalue()
