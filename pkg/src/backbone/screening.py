"""Marginal utilities and sure independence screening."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .data import Dataset, Task, ceil_fraction
from .errors import NewtonDivergence


class Loss(str, enum.Enum):
    SQUARED = "squared"
    LOGISTIC = "logistic"


# utility assigned to a feature whose univariate logistic fit diverges
DIVERGENT_UTILITY = 1e6


@dataclass(frozen=True)
class MarginalUtilities:
    s: np.ndarray
    loss_kind: Loss

    def __len__(self):
        return self.s.size


def default_loss(d: Dataset) -> Loss:
    return Loss.SQUARED if d.task is Task.REGRESSION else Loss.LOGISTIC


def default_alpha(n: int, p: int) -> float:
    """Fraction that keeps about ``10 n`` features, capped at all of them."""
    return min(1.0, 10.0 * n / p)


def _abs_correlation(X, y):
    Xc = X - X.mean(axis=0)
    yc = y - y.mean()
    denom = np.sqrt((Xc * Xc).sum(axis=0) * (yc @ yc))
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.abs(Xc.T @ yc) / denom
    return np.nan_to_num(s, nan=0.0)


def univariate_logistic(X, y, max_iter=100, tol=1e-10):
    """Fit ``(w0_j, w_j)`` minimizing the mean logistic loss, for every column at once.

    Labels are -1/+1.  Newton steps with per-column step halving on loss
    increase.  Returns ``(w0, w, converged)``.
    """
    n, p = X.shape
    w0 = np.zeros(p)
    w = np.zeros(p)

    def loss(w0, w):
        m = y[:, None] * (w0 + X * w)
        return np.logaddexp(0.0, -m).mean(axis=0)

    cur = loss(w0, w)
    converged = np.zeros(p, dtype=bool)
    for _ in range(max_iter):
        m = y[:, None] * (w0 + X * w)
        sig = 0.5 * (1.0 - np.tanh(0.5 * m))  # sigmoid(-m), overflow free
        g0 = -(y[:, None] * sig).mean(axis=0)
        g1 = -(y[:, None] * sig * X).mean(axis=0)
        converged = np.hypot(g0, g1) <= tol
        if converged.all():
            break
        h = sig * (1.0 - sig)
        h00 = h.mean(axis=0) + 1e-12
        h01 = (h * X).mean(axis=0)
        h11 = (h * X * X).mean(axis=0) + 1e-12
        det = h00 * h11 - h01 * h01
        det = np.where(det > 1e-300, det, 1e-300)
        d0 = -(h11 * g0 - h01 * g1) / det
        d1 = -(-h01 * g0 + h00 * g1) / det
        d0[converged] = 0.0
        d1[converged] = 0.0
        step = np.ones(p)
        for _ in range(30):
            trial = loss(w0 + step * d0, w + step * d1)
            bad = trial > cur + 1e-15
            if not bad.any():
                break
            step[bad] *= 0.5
        w0 = w0 + step * d0
        w = w + step * d1
        cur = loss(w0, w)
    return w0, w, converged


def separated_columns(X, y) -> np.ndarray:
    """Columns on which a threshold splits the two classes (ties allowed).

    The univariate logistic likelihood has no finite maximizer on them.
    """
    pos, neg = y > 0, y <= 0
    if not pos.any() or not neg.any():
        return np.ones(X.shape[1], dtype=bool)
    lo_p, hi_p = X[pos].min(axis=0), X[pos].max(axis=0)
    lo_n, hi_n = X[neg].min(axis=0), X[neg].max(axis=0)
    varying = np.ptp(X, axis=0) > 0
    return varying & ((hi_n <= lo_p) | (hi_p <= lo_n))


def marginal_utilities(d: Dataset, loss: Optional[Union[Loss, str]] = None) -> MarginalUtilities:
    """Per-feature utility ``s_j`` from a univariate fit.

    Squared loss gives ``|cor(X_j, y)|``.  Logistic loss gives ``|w_j|`` of the
    univariate logistic fit with intercept; columns that fail to converge or
    separate the classes get :data:`DIVERGENT_UTILITY` and raise a
    :class:`NewtonDivergence` warning.
    """
    loss = default_loss(d) if loss is None else Loss(loss)
    if loss is Loss.SQUARED:
        if d.task is Task.MULTICLASS:
            classes = np.unique(d.y)
            s = np.max([_abs_correlation(d.X, (d.y == c).astype(float)) for c in classes], axis=0)
        else:
            s = _abs_correlation(d.X, d.y)
        return MarginalUtilities(s, loss)
    if d.task is not Task.BINARY:
        raise ValueError("logistic utilities need -1/+1 labels")
    _, w, ok = univariate_logistic(d.X, d.y)
    ok &= ~separated_columns(d.X, d.y)
    s = np.abs(w)
    if not ok.all():
        bad = np.flatnonzero(~ok)
        warnings.warn(
            f"univariate logistic fit did not converge for {bad.size} feature(s), first {bad[0]}",
            NewtonDivergence,
            stacklevel=2,
        )
        s[bad] = DIVERGENT_UTILITY
    s = np.minimum(np.nan_to_num(s, nan=DIVERGENT_UTILITY), DIVERGENT_UTILITY)
    return MarginalUtilities(s, loss)


def top_indices(s: np.ndarray, count: int) -> np.ndarray:
    """Indices of the ``count`` largest entries, ties to the smaller index; sorted ascending."""
    s = np.asarray(s)
    count = min(max(int(count), 0), s.size)
    order = np.lexsort((np.arange(s.size), -s))
    return np.sort(order[:count])


def screen(d: Dataset, alpha: Optional[float] = None, loss=None, utilities: Optional[MarginalUtilities] = None):
    """Keep the ``ceil(alpha p)`` features with the largest marginal utilities.

    Returns
    -------
    (selected, utilities)
        ``selected`` is sorted ascending.
    """
    if alpha is None:
        alpha = default_alpha(d.n, d.p)
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    mu = utilities if utilities is not None else marginal_utilities(d, loss)
    keep = ceil_fraction(alpha, d.p)
    return top_indices(mu.s, keep), mu


def write_utilities(mu: MarginalUtilities, path: Union[str, Path]):
    with open(path, "w") as fh:
        fh.write("feature,utility\n")
        for j, v in enumerate(mu.s):
            fh.write("%d,%.17g\n" % (j, v))
