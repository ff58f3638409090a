"""Vectorized enumeration of axis-aligned split candidates."""

from __future__ import annotations

import enum
from fractions import Fraction

import numpy as np


class Impurity(str, enum.Enum):
    GINI = "gini"
    ENTROPY = "entropy"
    MISCLASSIFICATION = "misclassification"


class SortedColumns:
    """Per-feature row order of a fixed design, computed once.

    Restricting the global order to a node's rows keeps each column sorted,
    so node-level sorts cost O(n p) instead of O(m p log m).
    """

    def __init__(self, X: np.ndarray):
        self.X = np.asarray(X, dtype=float)
        self.order = np.argsort(self.X, axis=0, kind="stable").T.copy()  # (p, n)

    def node_view(self, rows: np.ndarray, features=None):
        """Rows of the node sorted by each feature: ``(idx, values)``, each (p', m)."""
        n = self.X.shape[0]
        mask = np.zeros(n, dtype=bool)
        mask[rows] = True
        order = self.order if features is None else self.order[features]
        m = int(mask.sum())
        idx = order[mask[order]].reshape(order.shape[0], m)
        feats = np.arange(self.X.shape[1]) if features is None else np.asarray(features)
        vals = self.X[idx, feats[:, None]]
        return idx, vals


def weighted_impurity(counts: np.ndarray, kind: Impurity) -> np.ndarray:
    """Child size times impurity, for class-count arrays with classes on the last axis."""
    size = counts.sum(axis=-1)
    if kind is Impurity.GINI:
        with np.errstate(invalid="ignore", divide="ignore"):
            v = size - (counts * counts).sum(axis=-1) / size
        return np.where(size > 0, v, 0.0)
    if kind is Impurity.ENTROPY:
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = counts / size[..., None]
            terms = np.where(counts > 0, counts * np.log(frac), 0.0)
        return -terms.sum(axis=-1)
    return size - counts.max(axis=-1)


def exact_weighted_impurity(counts, kind: Impurity):
    """Rational value of :func:`weighted_impurity` for one child (Gini or misclassification)."""
    counts = [int(c) for c in counts]
    size = sum(counts)
    if size == 0:
        return Fraction(0)
    if kind is Impurity.GINI:
        return Fraction(size) - Fraction(sum(c * c for c in counts), size)
    return Fraction(size - max(counts))


def _midpoints(lo, hi):
    mid = 0.5 * (lo + hi)
    # adjacent floats can round the midpoint down onto ``lo``
    return np.where(mid > lo, mid, hi)


def best_split(sorted_cols: SortedColumns, rows, y_idx, n_classes, min_bucket=1, kind=Impurity.GINI,
               features=None):
    """Split of ``rows`` minimizing the summed weighted child impurity.

    Candidates are midpoints between consecutive distinct values with at
    least ``min_bucket`` rows on each side.  Ties go to the lower feature,
    then the lower threshold; near-ties under Gini or misclassification are
    settled in exact rational arithmetic.

    Returns
    -------
    (feature, threshold, score, left_counts, right_counts) or None
    """
    kind = Impurity(kind)
    rows = np.asarray(rows, dtype=np.intp)
    m = rows.size
    if m < 2 * min_bucket or m < 2:
        return None
    feats = np.arange(sorted_cols.X.shape[1]) if features is None else np.asarray(features, dtype=np.intp)
    idx, vals = sorted_cols.node_view(rows, feats)
    onehot = np.eye(n_classes)[y_idx[idx]]  # (p', m, K)
    left = np.cumsum(onehot, axis=1)[:, :-1, :]  # left child holds the first i+1 rows
    total = left[:, -1, :] + onehot[:, -1, :]
    right = total[:, None, :] - left
    score = weighted_impurity(left, kind) + weighted_impurity(right, kind)
    sizes = np.arange(1, m)
    valid = (vals[:, :-1] < vals[:, 1:]) & (sizes >= min_bucket) & (m - sizes >= min_bucket)
    if not valid.any():
        return None
    score = np.where(valid, score, np.inf)
    best = score.min()
    tol = 1e-9 * max(1.0, abs(best))
    near = np.argwhere(score <= best + tol)  # row-major: feature, then position
    if near.shape[0] > 1 and kind is not Impurity.ENTROPY:
        exact = [
            exact_weighted_impurity(left[f, i], kind) + exact_weighted_impurity(right[f, i], kind)
            for f, i in near
        ]
        lo = min(exact)
        f, i = near[exact.index(lo)]
    else:
        f, i = near[0]
    thr = float(_midpoints(vals[f, i], vals[f, i + 1]))
    return int(feats[f]), thr, float(score[f, i]), left[f, i].copy(), right[f, i].copy()


def best_reassignment(sorted_cols: SortedColumns, rows, err_left, err_right, min_bucket=1, features=None,
                      limit=32):
    """Split of ``rows`` minimizing errors when left-routed rows cost
    ``err_left`` and right-routed rows cost ``err_right`` (both indexed by row id).

    Each feature contributes its best threshold (the lowest one on ties).
    Returns up to ``limit`` tuples ``(errors, feature, threshold)`` sorted by
    errors, then feature; only splits with at least ``min_bucket`` rows per
    side are considered.
    """
    rows = np.asarray(rows, dtype=np.intp)
    m = rows.size
    if m < 2 * min_bucket or m < 2:
        return []
    feats = np.arange(sorted_cols.X.shape[1]) if features is None else np.asarray(features, dtype=np.intp)
    idx, vals = sorted_cols.node_view(rows, feats)
    el = err_left[idx]
    er = err_right[idx]
    score = np.cumsum(el - er, axis=1)[:, :-1] + er.sum(axis=1)[:, None]
    sizes = np.arange(1, m)
    valid = (vals[:, :-1] < vals[:, 1:]) & (sizes >= min_bucket) & (m - sizes >= min_bucket)
    score = np.where(valid, score, np.inf)
    pos = np.argmin(score, axis=1)
    fbest = score[np.arange(feats.size), pos]
    ok = np.flatnonzero(np.isfinite(fbest))
    if ok.size == 0:
        return []
    order = ok[np.lexsort((ok, fbest[ok]))][:limit]
    thr = _midpoints(vals[order, pos[order]], vals[order, pos[order] + 1])
    return [(float(fbest[f]), int(feats[f]), float(t)) for f, t in zip(order, thr)]
