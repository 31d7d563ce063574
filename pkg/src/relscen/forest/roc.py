"""ROC curves and the area under them."""

from __future__ import annotations

import csv
import io
import math
from typing import Sequence

import numpy as np
from scipy.stats import rankdata


def _check(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel().astype(int)
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    if y.min(initial=1) == y.max(initial=0) or len(y) == 0:
        raise ValueError("AUC is undefined unless both classes are present")
    return s, y


def roc_auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Probability that a random positive outscores a random negative (ties count half)."""
    s, y = _check(scores, labels)
    ranks = rankdata(s, method="average")
    n1 = int(y.sum())
    n0 = len(y) - n1
    return float((ranks[y == 1].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


def roc_curve(scores: Sequence[float], labels: Sequence[int]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(fpr, tpr, threshold)`` with one point per distinct score, from (0, 0) upward.

    A scenario counts as predicted positive when its score is >= the threshold;
    the first point uses threshold ``inf``.
    """
    s, y = _check(scores, labels)
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    last = np.r_[np.flatnonzero(np.diff(s) != 0), len(s) - 1]
    tp = np.cumsum(y)[last]
    fp = (last + 1) - tp
    tpr = np.r_[0.0, tp / y.sum()]
    fpr = np.r_[0.0, fp / (len(y) - y.sum())]
    return fpr, tpr, np.r_[math.inf, s[last]]


def roc_csv(scores: Sequence[float], labels: Sequence[int]) -> str:
    fpr, tpr, thr = roc_curve(scores, labels)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["fpr", "tpr", "threshold"])
    for a, b, t in zip(fpr, tpr, thr):
        w.writerow([repr(float(a)), repr(float(b)), repr(float(t))])
    return buf.getvalue()
