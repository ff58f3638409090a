"""Exact best-subset selection by outer approximation with a custom branch-and-bound.

The inner cost ``c(z)`` (see :class:`InnerProblem`) is convex in the support
indicator, so every evaluated support ``z_t`` yields a global linear cut
``c(z) >= c(z_t) + g_t'(z - z_t)``.  The master problem
``min eta  s.t.  eta >= cuts, z binary, sum(z) <= k`` is solved by best-first
branching on single indicators.  Node bounds need no LP: a cut minimized over
a node's fractional box is its constant plus the fixed-in coefficients plus
the ``r`` most negative free coefficients.  Two further bounds are used:
monotonicity (``c`` does not increase when features are added, so the node is
bounded by ``c`` of every feature still allowed) and, for squared loss, a few
steps of dual ascent that also enrich the global cut pool.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..data import Dataset
from ..screening import Loss
from .objective import InnerProblem, RegressorSolution, loss_for
from .relaxation import SubgradientConfig, fit_relaxation_subgradient

_THETAS = np.linspace(0.0, 1.0, 21)


@dataclass
class CuttingPlaneConfig:
    k: int
    gamma: float
    time_limit: float = 60.0
    gap_tol: float = 1e-6
    node_limit: int = 100_000
    loss: Optional[Loss] = None
    dual_steps: int = 3
    # monotone bound is skipped when more than this many features are still allowed
    monotone_limit: int = 2000
    max_cuts: int = 5000


class _CutPool:
    """Rows ``(const, coef)`` with ``c(z) >= const + coef . z`` for every z."""

    def __init__(self, p, capacity):
        self.const = np.empty(capacity)
        self.coef = np.empty((capacity, p))
        self.size = 0
        self.capacity = capacity
        self.keys = set()

    def add(self, const, coef, key=None):
        if key is not None:
            if key in self.keys:
                return
            self.keys.add(key)
        if self.size == self.capacity:
            # drop the older half; old cuts are usually the loosest
            half = self.capacity // 2
            self.const[:half] = self.const[self.size - half : self.size]
            self.coef[:half] = self.coef[self.size - half : self.size]
            self.size = half
        self.const[self.size] = const
        self.coef[self.size] = coef
        self.size += 1

    def node_bound(self, in1, free, r):
        """Largest cut value minimized over the node box; returns (bound, row)."""
        C = self.coef[: self.size]
        val = self.const[: self.size] + C[:, in1].sum(axis=1)
        if r > 0 and free.size:
            F = C[:, free]
            if r < free.size:
                part = np.partition(F, r - 1, axis=1)[:, :r]
                val = val + np.minimum(part, 0.0).sum(axis=1)
            else:
                val = val + np.minimum(F, 0.0).sum(axis=1)
        t = int(np.argmax(val))
        return float(val[t]), t


class _Solver:
    def __init__(self, d: Dataset, cfg: CuttingPlaneConfig, loss: Loss):
        self.cfg = cfg
        self.k = int(cfg.k)
        self.inner = InnerProblem(d.X, d.y, cfg.gamma, loss)
        self.p = d.p
        self.pool = _CutPool(self.p, cfg.max_cuts)
        self.cache = {}
        self.best_S = None
        self.best_cost = math.inf

    def evaluate(self, S):
        """Exact cost of support ``S``; adds its cut and updates the incumbent."""
        S = np.sort(np.asarray(S, dtype=np.intp))
        key = S.tobytes()
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        cost, _, _, alpha = self.inner.solve(S)
        g = self.inner.gradient(alpha)
        self.pool.add(cost - g[S].sum(), g, key)
        self.cache[key] = cost
        if S.size <= self.k and (cost < self.best_cost or (cost == self.best_cost and key < self.best_S.tobytes())):
            self.best_S, self.best_cost = S, cost
        return cost

    def _dual_value(self, const, sq, in1, free, r):
        """min over the node box of the dual function, for squared column scores ``sq``."""
        val = const - 0.5 * self.inner.gamma * sq[..., in1].sum(axis=-1)
        if r > 0 and free.size:
            F = sq[..., free]
            rr = min(r, free.size)
            val = val - 0.5 * self.inner.gamma * -np.sort(-F, axis=-1)[..., :rr].sum(axis=-1)
        return val

    def dual_ascent(self, in1, free, r, alpha_row):
        """Improve the node bound by moving the dual vector toward that of the
        support the current dual favours (squared loss only)."""
        inner = self.inner
        y = inner.y
        X = inner.X
        alpha = alpha_row
        a = X.T @ alpha
        best = self._dual_value(y @ alpha - 0.5 * alpha @ alpha, a * a, in1, free, r)
        for _ in range(self.cfg.dual_steps):
            order = free[np.argsort(-(a[free] ** 2), kind="stable")[: min(r, free.size)]]
            S = np.concatenate((in1, order))
            self.evaluate(S)
            _, _, _, alpha_s = inner.solve(np.sort(S))
            bvec = X.T @ alpha_s
            th = _THETAS[:, None]
            A = (1.0 - th) * alpha[None, :] + th * alpha_s[None, :]
            R = (1.0 - th) * a[None, :] + th * bvec[None, :]
            consts = A @ y - 0.5 * (A * A).sum(axis=1)
            vals = self._dual_value(consts, R * R, in1, free, r)
            i = int(np.argmax(vals))
            if vals[i] <= best * (1 + 1e-12) + 1e-15 or i == 0:
                break
            best = float(vals[i])
            alpha, a = A[i], R[i]
            self.pool.add(float(consts[i]), -0.5 * inner.gamma * a * a)
        return best

    def node_alpha(self, S):
        return self.inner.solve(np.sort(S))[3]


def fit_exact_cutting_planes(
    d: Dataset,
    cfg: CuttingPlaneConfig,
    warm_start=None,
    use_subgradient_warm_start: bool = True,
) -> RegressorSolution:
    """Best subset of size at most ``k`` with a certified optimality gap.

    Parameters
    ----------
    warm_start : index array, optional
        Initial support.  When omitted the projected-subgradient relaxation
        supplies one (disable with ``use_subgradient_warm_start=False``).

    Returns
    -------
    RegressorSolution
        ``status`` is ``"optimal"``, ``"time_limit"`` or ``"node_limit"``;
        ``gap`` is ``(upper - lower) / max(|upper|, 1e-12)``.
    """
    start = time.perf_counter()
    loss = loss_for(d) if cfg.loss is None else Loss(cfg.loss)
    p = d.p
    k = min(int(cfg.k), p)
    solver = _Solver(d, cfg, loss)
    inner = solver.inner
    if k >= p:
        return inner.solution(np.arange(p), status="optimal", gap=0.0, lower_bound=inner.solve(np.arange(p))[0],
                              info={"nodes": 0})

    solver.best_S = np.empty(0, dtype=np.intp)
    solver.best_cost = inner.solve(solver.best_S)[0]
    if warm_start is None and use_subgradient_warm_start:
        warm = fit_relaxation_subgradient(d, SubgradientConfig(k=k, gamma=cfg.gamma, loss=loss), inner=inner)
        warm_start = warm.support
    if warm_start is not None and len(warm_start):
        ws = np.asarray(warm_start, dtype=np.intp)
        solver.evaluate(ws[:k] if ws.size > k else ws)
    # root cuts: the empty and the full support
    solver.evaluate(np.empty(0, dtype=np.intp))
    if p <= cfg.monotone_limit:
        inner_full_cost, _, _, alpha_full = inner.solve(np.arange(p))
        g = inner.gradient(alpha_full)
        solver.pool.add(inner_full_cost - g.sum(), g)

    squared = loss is Loss.SQUARED
    heap = []
    counter = 0
    all_idx = np.arange(p)
    root = (np.empty(0, dtype=np.intp), np.zeros(p, dtype=bool))  # (in1, out mask)
    heapq.heappush(heap, (-math.inf, counter, root))
    nodes = 0
    status = "optimal"

    def gap_of(lb):
        ub = solver.best_cost
        return max(0.0, (ub - lb) / max(abs(ub), 1e-12))

    while heap:
        lb_parent, _, (in1, out) = heap[0]
        if gap_of(lb_parent) <= cfg.gap_tol:
            break
        if time.perf_counter() - start > cfg.time_limit:
            status = "time_limit"
            break
        if nodes >= cfg.node_limit:
            status = "node_limit"
            break
        heapq.heappop(heap)
        nodes += 1

        in_mask = np.zeros(p, dtype=bool)
        in_mask[in1] = True
        free = all_idx[~(in_mask | out)]
        r = k - in1.size
        allowed = np.concatenate((in1, free))

        # leaves: the best choice is forced by monotonicity
        if r == 0 or allowed.size <= k:
            S = in1 if r == 0 else allowed
            solver.evaluate(S)
            continue

        lb, t = solver.pool.node_bound(in1, free, r)
        if allowed.size <= cfg.monotone_limit and out.any():
            mono_cost, _, _, alpha_m = inner.solve(np.sort(allowed))
            gm = inner.gradient(alpha_m)
            solver.pool.add(mono_cost - gm[allowed].sum(), gm)
            lb = max(lb, mono_cost)
        lb = max(lb, lb_parent)

        # heuristic: complete in1 with the free features the best cut favours
        coef = solver.pool.coef[t]
        pick = free[np.argsort(coef[free], kind="stable")[:r]]
        cand = np.concatenate((in1, pick))
        solver.evaluate(cand)
        if squared and cfg.dual_steps > 0 and gap_of(lb) > cfg.gap_tol:
            lb = max(lb, solver.dual_ascent(in1, free, r, solver.node_alpha(cand)))
            lb, t = max((lb, t), solver.pool.node_bound(in1, free, r))
        if gap_of(lb) <= cfg.gap_tol:
            continue

        # branch on the candidate's free feature whose cut coefficients disagree most
        C = solver.pool.coef[: solver.pool.size]
        spread = C[:, pick].max(axis=0) - C[:, pick].min(axis=0)
        j = int(pick[int(np.argmax(spread))])
        out_j = out.copy()
        out_j[j] = True
        counter += 1
        heapq.heappush(heap, (lb, counter, (np.append(in1, j), out)))
        counter += 1
        heapq.heappush(heap, (lb, counter, (in1, out_j)))

    lower = min(heap[0][0], solver.best_cost) if heap else solver.best_cost
    gap = gap_of(lower)
    if status == "optimal" and heap and gap > cfg.gap_tol:
        status = "time_limit"
    info = {
        "nodes": nodes,
        "cuts": solver.pool.size,
        "evaluations": inner.evaluations,
        "wall_time": time.perf_counter() - start,
    }
    return inner.solution(solver.best_S, status=status, gap=gap, lower_bound=lower, info=info)
