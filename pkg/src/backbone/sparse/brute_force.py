"""Exhaustive best-subset search, the reference oracle for the exact solver."""

from __future__ import annotations

import itertools
import math
from typing import Optional

import numpy as np

from ..data import Dataset
from ..errors import TooLarge
from ..screening import Loss
from .objective import InnerProblem, RegressorSolution, loss_for

MAX_SUPPORTS = 10**6


def brute_force_best_subset(
    d: Dataset, k: int, gamma: float, loss: Optional[Loss] = None, limit: int = MAX_SUPPORTS
) -> RegressorSolution:
    """Ridge fit on every support of size at most ``k``; the global minimizer wins.

    Ties keep the first support in (size, lexicographic) order.
    """
    loss = loss_for(d) if loss is None else Loss(loss)
    p = d.p
    k = min(k, p)
    total = sum(math.comb(p, s) for s in range(k + 1))
    if total > limit:
        raise TooLarge(f"{total} supports exceed the enumeration limit {limit}")
    inner = InnerProblem(d.X, d.y, gamma, loss)
    best, best_cost = (), math.inf
    for size in range(k + 1):
        for S in itertools.combinations(range(p), size):
            cost = inner.solve(np.array(S, dtype=np.intp))[0]
            if cost < best_cost:
                best, best_cost = S, cost
    return inner.solution(np.array(best, dtype=np.intp), info={"enumerated": total})
