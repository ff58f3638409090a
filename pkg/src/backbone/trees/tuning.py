"""Holdout grid search for tree hyperparameters."""

from __future__ import annotations

import enum
import itertools
from typing import Sequence

import numpy as np

from ..data import Dataset, holdout_split
from ._splits import Impurity
from .cart import TreeParams, fit_cart
from .local_search import fit_oct_local_search


class TreeMethod(str, enum.Enum):
    CART = "cart"
    OCT_LOCAL_SEARCH = "oct_local_search"


def fit_tree(d: Dataset, params: TreeParams, method=TreeMethod.CART, restarts: int = 5, seed: int = 0):
    if TreeMethod(method) is TreeMethod.CART:
        return fit_cart(d, params)
    return fit_oct_local_search(d, params, restarts=restarts, seed=seed)


def tree_grid_scores(d: Dataset, depth_grid, nmin_grid, lambda_grid, method=TreeMethod.CART, ratio: float = 0.7,
                     seed: int = 0, restarts: int = 5, impurity=Impurity.GINI, per_row_lambda: bool = False):
    """Validation misclassification rate of every grid point, in grid order.

    With ``per_row_lambda`` the complexity values are rates: the weight used
    for a fit is the value times the number of rows being fitted.
    """
    sp = holdout_split(d, ratio, seed)
    dt, dv = d.subset(sp.train), d.subset(sp.validation)
    scale = dt.n if per_row_lambda else 1.0
    out = []
    for depth, nmin, lam in itertools.product(depth_grid, nmin_grid, lambda_grid):
        params = TreeParams(int(depth), int(nmin), float(lam) * scale, impurity)
        tree = fit_tree(dt, params, method, restarts, seed)
        out.append(((int(depth), int(nmin), float(lam)), float(np.mean(tree.predict(dv.X) != dv.y))))
    return out


def cv_tree(d: Dataset, depth_grid: Sequence[int], nmin_grid: Sequence[int], lambda_grid: Sequence[float],
            method=TreeMethod.CART, ratio: float = 0.7, seed: int = 0, restarts: int = 5, impurity=Impurity.GINI,
            per_row_lambda: bool = False):
    """Pick the grid point with the lowest validation error and refit it on all of ``d``.

    Ties go to the earliest grid point (grids are scanned depth-major).

    Returns
    -------
    (TreeParams, DecisionTree)
        The parameters of the refit, with the complexity weight on ``d``'s scale.
    """
    scores = tree_grid_scores(d, depth_grid, nmin_grid, lambda_grid, method, ratio, seed, restarts, impurity,
                              per_row_lambda)
    if not scores:
        raise ValueError("empty tree grid")
    best = min(range(len(scores)), key=lambda i: (scores[i][1], i))
    depth, nmin, lam = scores[best][0]
    params = TreeParams(depth, nmin, lam * (d.n if per_row_lambda else 1.0), impurity)
    return params, fit_tree(d, params, method, restarts, seed)
