"""Ready-made subproblem fitters and final fitters for :func:`run_backbone`.

All of them are picklable callables so they can run in worker processes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .core import BackboneConfig, BackboneResult, run_backbone
from .data import Dataset
from .errors import NonConvergence
from .screening import top_indices
from .sparse.cutting_planes import CuttingPlaneConfig, fit_exact_cutting_planes
from .sparse.objective import RegressorSolution
from .sparse.tuning import Solver, cv_gamma, cv_incremental_k, elastic_net_cv
from .trees.cart import TreeParams
from .trees.model import relevant_features
from .trees.tuning import TreeMethod, cv_tree, fit_tree


def support_schedule(k: int) -> Tuple[int, int]:
    """Initial size and step of the incremental support search: both ``ceil(k/3)``."""
    step = max(1, math.ceil(k / 3))
    return step, step


@dataclass(frozen=True)
class SubgradientSubproblem:
    """Relaxation fits with an incremental search over the support size."""

    k_max: int
    k0: Optional[int] = None
    k_step: Optional[int] = None
    rel_tol: float = 0.01
    max_iters: int = 500
    gamma: Optional[float] = None

    def __call__(self, d: Dataset, seed: int) -> RegressorSolution:
        k0, step = support_schedule(self.k_max)
        k0 = self.k0 or k0
        step = self.k_step or step
        k_cap = min(self.k_max, d.p, d.n - 1)
        _, sol = cv_incremental_k(d, min(k0, k_cap), step, Solver.SUBGRADIENT, k_max=k_cap, rel_tol=self.rel_tol,
                                  gamma=self.gamma, seed=seed, max_iters=self.max_iters)
        return sol


@dataclass(frozen=True)
class ElasticNetSubproblem:
    """Elastic net tuned on a holdout split; keeps the ``k_max`` largest coefficients."""

    k_max: int
    mus: Tuple[float, ...] = (0.2, 0.4, 0.6, 0.8, 1.0)
    grid_len: int = 20

    def __call__(self, d: Dataset, seed: int) -> RegressorSolution:
        _, sol = elastic_net_cv(d, self.mus, self.k_max, self.grid_len, seed=seed)
        return sol


def regression_support(sol: RegressorSolution, k_max: Optional[int] = None):
    """Support of a fit, truncated to its ``k_max`` largest coefficients."""
    if k_max is None or sol.support.size <= k_max:
        return sol.support
    return sol.support[top_indices(np.abs(sol.w[sol.support]), k_max)]


@dataclass(frozen=True)
class TruncatedSupport:
    k_max: int

    def __call__(self, sol: RegressorSolution):
        return regression_support(sol, self.k_max)


@dataclass(frozen=True)
class ExactFinal:
    """Cutting-plane best subset on the reduced problem; ``gamma`` defaults to ``1/sqrt(n)``."""

    k: int
    gamma: Optional[float] = None
    time_limit: float = 60.0
    cv_gamma_points: int = 0

    def __call__(self, d: Dataset) -> RegressorSolution:
        k = min(self.k, d.p)
        gamma = self.gamma
        if gamma is None and self.cv_gamma_points >= 2:
            gamma = cv_gamma(d, k, self.cv_gamma_points)
        if gamma is None:
            gamma = 1.0 / math.sqrt(d.n)
        return fit_exact_cutting_planes(d, CuttingPlaneConfig(k=k, gamma=gamma, time_limit=self.time_limit))


@dataclass(frozen=True)
class TreeGrid:
    """Holdout grid for tree hyperparameters; complexity values are per-row rates.

    An empty ``depths`` tuple means the depth of the base parameters.
    """

    depths: Tuple[int, ...] = ()
    min_buckets: Tuple[int, ...] = (1,)
    complexities: Tuple[float, ...] = (0.0,)
    ratio: float = 0.7


def _fit_tree(d: Dataset, params: TreeParams, grid: Optional[TreeGrid], method: TreeMethod, restarts: int, seed: int):
    if grid is None:
        return fit_tree(d, params, method, restarts, seed)
    depths = grid.depths or (params.max_depth,)
    _, tree = cv_tree(d, depths, grid.min_buckets, grid.complexities, method, grid.ratio, seed, restarts,
                      params.impurity, per_row_lambda=True)
    return tree


@dataclass(frozen=True)
class CartSubproblem:
    params: TreeParams
    grid: Optional[TreeGrid] = None

    def __call__(self, d: Dataset, seed: int):
        return _fit_tree(d, self.params, self.grid, TreeMethod.CART, 1, seed)


def tree_features(tree):
    return sorted(relevant_features(tree))


@dataclass(frozen=True)
class LocalSearchFinal:
    params: TreeParams
    restarts: int = 5
    seed: int = 0
    grid: Optional[TreeGrid] = None

    def __call__(self, d: Dataset):
        return _fit_tree(d, self.params, self.grid, TreeMethod.OCT_LOCAL_SEARCH, self.restarts, self.seed)


def regression_backbone(d: Dataset, cfg: BackboneConfig, k: int, subproblem: str = "subgradient",
                        gamma: Optional[float] = None, time_limit: float = 60.0, executor=None) -> BackboneResult:
    """Backbone for sparse regression: relaxation (or elastic-net) subproblems,
    cutting-plane best subset on the backbone."""
    if subproblem == "subgradient":
        fit_sub = SubgradientSubproblem(cfg.k_max)
    elif subproblem == "elastic_net":
        fit_sub = ElasticNetSubproblem(cfg.k_max)
    else:
        raise ValueError(f"unknown subproblem solver {subproblem!r}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonConvergence)
        return run_backbone(d, cfg, fit_sub, TruncatedSupport(cfg.k_max), ExactFinal(k, gamma, time_limit), executor)


def tree_backbone(d: Dataset, cfg: BackboneConfig, sub_params: TreeParams, final_params: TreeParams,
                  restarts: int = 5, seed: int = 0, executor=None, sub_grid: Optional[TreeGrid] = None,
                  final_grid: Optional[TreeGrid] = None) -> BackboneResult:
    """Backbone for classification trees: CART subproblems, local-search tree on the backbone.

    The subproblem depth bounds ``cfg.k_max``: a tree of depth D uses at most ``2**D - 1`` features.
    """
    return run_backbone(d, cfg, CartSubproblem(sub_params, sub_grid), tree_features,
                        LocalSearchFinal(final_params, restarts, seed, final_grid), executor)
