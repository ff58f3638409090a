"""Elastic-net coordinate descent for squared and logistic loss.

Squared loss minimizes
``(1/2n) ||y - b - Xw||^2 + lam (mu ||w||_1 + (1 - mu)/2 ||w||^2)``;
logistic loss replaces the first term by the mean logistic loss and is
handled by iteratively reweighted quadratic approximations.  The intercept
is never penalized.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..data import Dataset
from ..errors import NonConvergence
from ..screening import Loss
from .objective import RegressorSolution, loss_for, objective, sigmoid


@dataclass
class ElasticNetConfig:
    lam: float
    mu: float = 1.0
    max_iters: int = 10_000
    tol: float = 1e-10
    coef_threshold: float = 1e-6
    loss: Optional[Loss] = None


def soft_threshold(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def lambda_max(X, y, mu: float, loss: Loss = Loss.SQUARED) -> float:
    """Smallest ``lam`` whose solution is all zero (for ``mu > 0``)."""
    n = X.shape[0]
    if loss is Loss.SQUARED:
        g = (X - X.mean(axis=0)).T @ (y - y.mean())
    else:
        # gradient at the intercept-only model
        q = (1.0 + y.mean()) / 2.0
        g = X.T @ ((y + 1.0) / 2.0 - q)
    return float(np.max(np.abs(g)) / (n * mu))


def _cd_weighted(X, z, h, lam, mu, w, b, max_iters, tol, col_sq=None):
    """Coordinate descent on ``(1/2n) sum h_i (z_i - b - x_i w)^2 + penalty``.

    ``h`` are observation weights.  Returns ``(w, b, sweeps, converged)``.
    """
    n, p = X.shape
    l1 = lam * mu
    l2 = lam * (1.0 - mu)
    hs = h.sum()
    r = z - b - X @ w
    if col_sq is None:
        col_sq = (h[:, None] * X * X).sum(axis=0) / n
    denom = col_sq + l2
    active = np.flatnonzero(w)
    full_pass = True
    sweeps = 0
    while sweeps < max_iters:
        sweeps += 1
        idx = np.arange(p) if full_pass else active
        delta = 0.0
        # intercept
        db = (h @ r) / hs
        if db != 0.0:
            b += db
            r -= db
            delta = abs(db)
        hr = h * r
        for j in idx:
            xj = X[:, j]
            wj = w[j]
            rho = xj @ hr / n + col_sq[j] * wj
            new = soft_threshold(rho, l1) / denom[j] if denom[j] > 0 else 0.0
            if new != wj:
                step = new - wj
                r -= step * xj
                hr -= (step * h) * xj
                w[j] = new
                delta = max(delta, abs(step))
        if full_pass:
            active = np.flatnonzero(w)
            if delta < tol:
                return w, b, sweeps, True
            full_pass = False
        elif delta < tol:
            full_pass = True  # verify the active set with a full sweep
    return w, b, sweeps, False


def _fit_squared(X, y, cfg, w0):
    n, p = X.shape
    xm = X.mean(axis=0)
    ym = y.mean()
    Xc = X - xm
    w = np.zeros(p) if w0 is None else np.array(w0, dtype=float)
    w, _, sweeps, ok = _cd_weighted(Xc, y - ym, np.ones(n), cfg.lam, cfg.mu, w, 0.0, cfg.max_iters, cfg.tol)
    return w, float(ym - xm @ w), sweeps, ok


def _fit_logistic(X, y, cfg, w0):
    n, p = X.shape
    w = np.zeros(p) if w0 is None else np.array(w0, dtype=float)
    yb = np.clip((1.0 + y.mean()) / 2.0, 1e-12, 1 - 1e-12)
    b = float(np.log(yb / (1.0 - yb)))
    t = (y + 1.0) / 2.0
    total = 0
    ok = False
    for _ in range(200):
        u = X @ w + b
        q = sigmoid(u)
        h = np.maximum(q * (1.0 - q), 1e-5)
        z = u + (t - q) / h
        w_old, b_old = w.copy(), b
        w, b, sweeps, inner_ok = _cd_weighted(X, z, h, cfg.lam, cfg.mu, w, b, cfg.max_iters, cfg.tol)
        total += sweeps
        change = max(np.max(np.abs(w - w_old), initial=0.0), abs(b - b_old))
        if change < max(cfg.tol, 1e-12) * 10 and inner_ok:
            ok = True
            break
    return w, b, total, ok


def fit_elastic_net(d: Dataset, cfg: ElasticNetConfig, warm=None) -> RegressorSolution:
    """Elastic-net fit; coefficients with magnitude at most ``coef_threshold`` are zeroed.

    The reported objective is the shared ridge-penalized risk evaluated at
    ``gamma = 1 / (n lam (1 - mu))`` when that is finite, otherwise the plain
    empirical loss, so solutions remain comparable across solvers.
    """
    loss = loss_for(d) if cfg.loss is None else Loss(cfg.loss)
    X, y = d.X, d.y
    n = d.n
    if loss is Loss.SQUARED:
        w, b, sweeps, ok = _fit_squared(X, y, cfg, warm)
    else:
        w, b, sweeps, ok = _fit_logistic(X, y, cfg, warm)
    if not ok:
        warnings.warn(f"elastic net stopped after {sweeps} sweeps", NonConvergence, stacklevel=2)
    w = np.where(np.abs(w) > cfg.coef_threshold, w, 0.0)
    if loss is Loss.SQUARED:
        b = float(y.mean() - X.mean(axis=0) @ w)
    ridge = n * cfg.lam * (1.0 - cfg.mu)
    gamma = 1.0 / ridge if ridge > 0 else np.inf
    obj = objective(X, y, w, b, gamma, loss) if np.isfinite(gamma) else objective(X, y, w, b, 1.0, loss) - (w @ w) / 2.0
    return RegressorSolution(
        w=w,
        support=np.flatnonzero(w),
        objective=obj,
        loss_kind=loss,
        gamma=gamma,
        intercept=b,
        status="ok" if ok else "not_converged",
        info={"sweeps": sweeps, "lam": cfg.lam, "mu": cfg.mu},
    )

