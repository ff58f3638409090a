"""Boolean relaxation of the support constraint, solved by projected subgradient steps."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..data import Dataset
from ..screening import Loss, top_indices
from .objective import InnerProblem, RegressorSolution, loss_for


@dataclass
class SubgradientConfig:
    k: int
    gamma: float
    max_iters: int = 500
    step_scale: float = 1.0
    tol: float = 1e-6
    loss: Optional[Loss] = None


def project_capped_simplex(v: np.ndarray, k: float) -> np.ndarray:
    """Euclidean projection onto ``{z in [0,1]^p : sum(z) <= k}``.

    The solution is ``clip(v - tau, 0, 1)`` with ``tau = 0`` when that already
    satisfies the budget, otherwise the unique ``tau > 0`` with
    ``sum clip(v - tau, 0, 1) = k``; ``tau`` is found by scanning the sorted
    breakpoints of that piecewise-linear sum.
    """
    v = np.asarray(v, dtype=float)
    x = np.clip(v, 0.0, 1.0)
    if x.sum() <= k:
        return x
    if k <= 0:
        return np.zeros_like(v)
    # sum clip(v - tau, 0, 1) is non-increasing and piecewise linear in tau,
    # with kinks at v_j - 1 (leaves the upper bound) and v_j (hits zero)
    vs = np.sort(v)
    cs = np.concatenate(([0.0], np.cumsum(vs)))
    bps = np.unique(np.concatenate((vs - 1.0, vs)))
    bps = np.concatenate(([0.0], bps[bps > 0.0]))
    below = np.searchsorted(vs, bps, side="right")  # v_j <= tau
    under_top = np.searchsorted(vs, bps + 1.0, side="left")  # v_j < tau + 1
    f = (v.size - under_top) + (cs[under_top] - cs[below]) - (under_top - below) * bps
    i = int(np.argmax(f <= k))  # first kink where the budget is met; f[0] > k
    lo, hi, f_lo, f_hi = bps[i - 1], bps[i], f[i - 1], f[i]
    tau = hi if f_lo == f_hi else lo + (f_lo - k) * (hi - lo) / (f_lo - f_hi)
    return np.clip(v - tau, 0.0, 1.0)


def _largest(z: np.ndarray, k: int) -> np.ndarray:
    return top_indices(z, k)


def fit_relaxation_subgradient(
    d: Dataset,
    cfg: SubgradientConfig,
    warm_support=None,
    inner: Optional[InnerProblem] = None,
) -> RegressorSolution:
    """Projected subgradient descent on the relaxed support indicator.

    Each iteration solves the ridge problem weighted by the current ``z`` to
    get the dual residual, moves ``z`` along the negative gradient of the
    relaxed cost with a ``c/sqrt(t)`` step, and projects back onto the capped
    simplex.  Every iterate is rounded to its ``k`` largest entries; the best
    rounding by exact objective is refit and returned.
    """
    loss = loss_for(d) if cfg.loss is None else Loss(cfg.loss)
    p = d.p
    k = min(int(cfg.k), p)
    if inner is None:
        inner = InnerProblem(d.X, d.y, cfg.gamma, loss)
    if k >= p:
        sol = inner.solution(np.arange(p), info={"iterations": 0})
        sol.info["z"] = np.ones(p)
        return sol

    z = np.ones(p)
    if warm_support is not None and len(warm_support):
        ws = np.asarray(warm_support, dtype=np.intp)
        z = np.full(p, 0.5 * max(k - ws.size, 0) / max(p - ws.size, 1))
        z[ws] = 1.0
    z = project_capped_simplex(z, k)

    seen = {}

    def rounded_cost(S):
        key = S.tobytes()
        if key not in seen:
            seen[key] = inner.solve(S)[0]
        return seen[key]

    best_S, best_cost = None, math.inf
    if warm_support is not None and len(warm_support) == k:
        best_S = np.sort(np.asarray(warm_support, dtype=np.intp))
        best_cost = rounded_cost(best_S)
    scale = None
    it = 0
    for it in range(1, cfg.max_iters + 1):
        active = np.flatnonzero(z > 0.0)
        _, _, _, alpha = inner.solve(active, z)
        g = inner.gradient(alpha)
        S = _largest(z, k)
        c = rounded_cost(S)
        if c < best_cost:
            best_S, best_cost = S, c
        if scale is None:
            gmax = np.max(np.abs(g))
            scale = cfg.step_scale / gmax if gmax > 0 else 1.0
        z_new = project_capped_simplex(z - (scale / math.sqrt(it)) * g, k)
        moved = np.max(np.abs(z_new - z))
        z = z_new
        if moved < cfg.tol:
            break
    S = _largest(z, k)
    if rounded_cost(S) < best_cost:
        best_S = S
    sol = inner.solution(best_S, info={"iterations": it, "z": z})
    return sol


def randomized_rounding(z_relaxed, rounds: int, k_max: int, seed: int = 0, scores=None) -> np.ndarray:
    """Union over ``rounds`` Bernoulli(z) draws, each cut to its ``k_max`` top-ranked entries.

    Entries are ranked by ``scores`` (e.g. |coefficient|) when given, else by ``z``.
    """
    z = np.asarray(z_relaxed, dtype=float)
    if np.any((z < 0) | (z > 1)):
        raise ValueError("relaxed indicators must lie in [0, 1]")
    rank = np.abs(np.asarray(scores, dtype=float)) if scores is not None else z
    rng = np.random.default_rng(seed)
    chosen = np.zeros(z.size, dtype=bool)
    for _ in range(rounds):
        drawn = np.flatnonzero(rng.random(z.size) < z)
        if drawn.size > k_max:
            drawn = drawn[top_indices(rank[drawn], k_max)]
        chosen[drawn] = True
    return np.flatnonzero(chosen)
