"""Hyperparameter selection for the sparse solvers."""

from __future__ import annotations

import enum
import math
import warnings
from typing import Optional, Sequence

import numpy as np

from ..data import Dataset, holdout_split
from ..errors import InvalidGrid, NonConvergence
from ..screening import Loss
from .cutting_planes import CuttingPlaneConfig, fit_exact_cutting_planes
from .elastic_net import ElasticNetConfig, fit_elastic_net, lambda_max
from .objective import RegressorSolution, loss_for, loss_values
from .relaxation import SubgradientConfig, fit_relaxation_subgradient

# mu used to size the lambda grid when mu = 0 (pure ridge has no finite lambda_max)
_RIDGE_MU_FLOOR = 1e-3


class Solver(str, enum.Enum):
    SUBGRADIENT = "subgradient"
    CUTTING_PLANES = "cutting_planes"


def validation_loss(sol: RegressorSolution, d: Dataset) -> float:
    """Mean loss of a fitted model on held-out data."""
    return float(loss_values(d.y, sol.predict(d.X), sol.loss_kind).mean())


def _split(d: Dataset, ratio: float, seed: int):
    sp = holdout_split(d, ratio, seed)
    return d.subset(sp.train), d.subset(sp.validation)


def _nnz_at(d, lam, mu, loss, warm=None):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonConvergence)
        sol = fit_elastic_net(d, ElasticNetConfig(lam, mu, tol=1e-7, loss=loss), warm=warm)
    return sol.k, sol


def lambda_path_floor(d: Dataset, mu: float, k_max: int, loss: Loss, lam_top: float, steps: int = 30) -> float:
    """Largest ``lam`` (to a factor of about 1.01) giving at least ``k_max`` nonzeros.

    Bisection on ``log(lam)`` between ``lam_top`` and ``1e-4 lam_top``; if even
    the bottom gives fewer nonzeros, the bottom is returned.
    """
    hi, lo = math.log(lam_top), math.log(lam_top * 1e-4)
    if _nnz_at(d, math.exp(lo), mu, loss)[0] < k_max:
        return math.exp(lo)
    for _ in range(steps):
        if hi - lo < 0.01:
            break
        mid = 0.5 * (hi + lo)
        if _nnz_at(d, math.exp(mid), mu, loss)[0] >= k_max:
            lo = mid
        else:
            hi = mid
    return math.exp(lo)


def elastic_net_cv(
    d: Dataset,
    mus: Sequence[float],
    k_max: int,
    grid_len: int = 20,
    ratio: float = 0.7,
    seed: int = 0,
    loss: Optional[Loss] = None,
    coef_threshold: float = 1e-6,
):
    """Holdout grid search over ``mus`` and a per-``mu`` logarithmic lambda path.

    Each path runs from ``lambda_max`` (the empty model) down to the largest
    lambda with at least ``k_max`` nonzeros.  The configuration with the
    smallest validation loss is refit on all of ``d``.

    Returns
    -------
    (ElasticNetConfig, RegressorSolution)
        ``solution.info["cv_scores"]`` lists ``(mu, lam, score)`` for each of
        the ``len(mus) * grid_len`` grid fits.
    """
    if grid_len < 1 or not len(mus):
        raise InvalidGrid("need at least one mu and one lambda")
    loss = loss_for(d) if loss is None else Loss(loss)
    dt, dv = _split(d, ratio, seed)
    scores = []
    best = (math.inf, None)
    for mu in mus:
        mu_eff = max(float(mu), _RIDGE_MU_FLOOR)
        top = lambda_max(dt.X, dt.y, mu_eff, loss)
        if not top > 0:
            top = 1.0
        floor = lambda_path_floor(dt, mu_eff, k_max, loss, top)
        lams = np.geomspace(top, floor, grid_len) if grid_len > 1 else np.array([top])
        warm = None
        for lam in lams:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", NonConvergence)
                sol = fit_elastic_net(dt, ElasticNetConfig(float(lam), float(mu), loss=loss,
                                                          coef_threshold=coef_threshold), warm=warm)
            warm = sol.w
            score = validation_loss(sol, dv)
            scores.append((float(mu), float(lam), score))
            if score < best[0]:
                best = (score, ElasticNetConfig(float(lam), float(mu), loss=loss, coef_threshold=coef_threshold))
    cfg = best[1]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonConvergence)
        final = fit_elastic_net(d, cfg)
    final.info["cv_scores"] = scores
    final.info["validation_loss"] = best[0]
    return cfg, final


def _fit_k(solver: Solver, d: Dataset, k: int, gamma: float, loss: Loss, warm, max_iters: int, time_limit: float):
    if solver is Solver.SUBGRADIENT:
        return fit_relaxation_subgradient(d, SubgradientConfig(k=k, gamma=gamma, loss=loss, max_iters=max_iters),
                                          warm_support=warm)
    return fit_exact_cutting_planes(d, CuttingPlaneConfig(k=k, gamma=gamma, loss=loss, time_limit=time_limit),
                                    warm_start=warm)


def cv_incremental_k(
    d: Dataset,
    k0: int,
    k_step: int,
    solver: Solver = Solver.SUBGRADIENT,
    k_max: Optional[int] = None,
    rel_tol: float = 0.01,
    gamma: Optional[float] = None,
    ratio: float = 0.7,
    seed: int = 0,
    loss: Optional[Loss] = None,
    max_iters: int = 500,
    time_limit: float = 30.0,
    refit: bool = True,
):
    """Grow the support size ``k0, k0 + k_step, ...`` until it stops paying off.

    The grid always ends at ``k_max``.  Stops at the first ``k_i`` whose two
    successors both improve the validation loss by less than ``rel_tol``
    (relative); sizes beyond ``k_max`` count as no improvement.  Each fit is warm-started from the
    previous support.  The chosen size is refit on all of ``d`` when
    ``refit`` is set.

    Returns
    -------
    (k_star, RegressorSolution)
    """
    solver = Solver(solver)
    loss = loss_for(d) if loss is None else Loss(loss)
    if k0 < 1 or k0 >= d.n or k_step < 1:
        raise InvalidGrid(f"bad support grid k0={k0}, step={k_step} for n={d.n}")
    dt, dv = _split(d, ratio, seed)
    if gamma is None:
        gamma = 1.0 / math.sqrt(dt.n)
    k_max = min(d.p, d.n - 1) if k_max is None else min(k_max, d.p)
    k0 = min(k0, k_max)
    ks = list(range(k0, k_max + 1, k_step))
    if ks[-1] != k_max:
        ks.append(k_max)
    sols, scores = [], []

    def improves(i, j):
        if j >= len(ks):
            return False
        if j >= len(sols):
            sol = _fit_k(solver, dt, ks[j], gamma, loss, sols[-1].support, max_iters, time_limit)
            sols.append(sol)
            scores.append(validation_loss(sol, dv))
        base = scores[i]
        return (base - scores[j]) > rel_tol * abs(base)

    sols.append(_fit_k(solver, dt, ks[0], gamma, loss, None, max_iters, time_limit))
    scores.append(validation_loss(sols[0], dv))
    i = 0
    while True:
        a = improves(i, i + 1)
        b = improves(i, i + 2)
        if not (a or b):
            break
        i += 1
    k_star = ks[i]
    chosen = sols[i]
    if refit:
        chosen = _fit_k(solver, d, k_star, gamma, loss, chosen.support, max_iters, time_limit)
    chosen.info["k_scores"] = list(zip(ks[: len(scores)], scores))
    return k_star, chosen


def gamma_grid(d: Dataset, k: int, l: int) -> np.ndarray:
    """``l`` log-spaced values from ``p / (k n max_i ||x_i||^2)`` to ``1/sqrt(n)``."""
    if l < 2:
        raise InvalidGrid("a gamma grid needs at least two points")
    row_sq = float(np.max((d.X * d.X).sum(axis=1)))
    g0 = d.p / (k * d.n * row_sq)
    return np.geomspace(g0, 1.0 / math.sqrt(d.n), l)


def cv_gamma(d: Dataset, k: int, l: int = 5, solver: Solver = Solver.SUBGRADIENT, ratio: float = 0.7, seed: int = 0,
             loss: Optional[Loss] = None):
    """Pick ``gamma`` from :func:`gamma_grid` by holdout loss at fixed ``k``."""
    loss = loss_for(d) if loss is None else Loss(loss)
    dt, dv = _split(d, ratio, seed)
    grid = gamma_grid(dt, k, l)
    scored = [(validation_loss(_fit_k(Solver(solver), dt, k, g, loss, None, 500, 30.0), dv), i)
              for i, g in enumerate(grid)]
    return float(grid[min(scored)[1]])
