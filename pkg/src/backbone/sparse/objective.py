"""Shared objective evaluation for ridge-regularized sparse regression.

The loss is ``sum_i l(y_i, x_i'w + b) + ||w||^2 / (2 gamma)`` with
``l(y, u) = (y - u)^2 / 2`` (squared) or ``log(1 + exp(-y u))`` (logistic).
The intercept ``b`` is never penalized.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from ..data import Dataset, Task
from ..errors import LinearSolveFailure
from ..screening import Loss


@dataclass
class RegressorSolution:
    w: np.ndarray
    support: np.ndarray
    objective: float
    gap: float = 0.0
    loss_kind: Loss = Loss.SQUARED
    gamma: float = 1.0
    intercept: float = 0.0
    lower_bound: Optional[float] = None
    status: str = "ok"
    info: dict = field(default_factory=dict)

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Linear score ``X w + b`` (a logit for logistic loss)."""
        return np.asarray(X) @ self.w + self.intercept

    def predict_labels(self, X: np.ndarray) -> np.ndarray:
        return np.where(self.predict(X) >= 0.0, 1.0, -1.0)

    @property
    def k(self) -> int:
        return int(self.support.size)


def loss_for(d: Dataset) -> Loss:
    return Loss.SQUARED if d.task is Task.REGRESSION else Loss.LOGISTIC


def loss_values(y, u, loss: Loss) -> np.ndarray:
    if loss is Loss.SQUARED:
        r = y - u
        return 0.5 * r * r
    return np.logaddexp(0.0, -y * u)


def objective(X, y, w, intercept, gamma, loss: Loss) -> float:
    """The penalized empirical risk every solver reports."""
    u = X @ w + intercept
    return float(loss_values(y, u, Loss(loss)).sum() + (w @ w) / (2.0 * gamma))


def sigmoid(t):
    return 0.5 * (1.0 + np.tanh(0.5 * t))


def _chol_solve(A, b):
    try:
        return cho_solve(cho_factor(A, lower=True, check_finite=False), b, check_finite=False)
    except (LinAlgError, ValueError) as exc:
        raise LinearSolveFailure(str(exc)) from exc


def ridge_logistic(X, y, penalty, w0=None, b0=0.0, tol=1e-8, max_iter=100):
    """Damped Newton for ``sum log(1+exp(-y(Xw+b))) + sum_j penalty_j w_j^2 / 2``.

    ``penalty`` is a per-coordinate weight (``1/(gamma z_j)``).  Stops when the
    gradient norm drops below ``tol``.  Returns ``(w, b, converged)``.
    """
    n, s = X.shape
    w = np.zeros(s) if w0 is None else np.array(w0, dtype=float)
    b = float(b0)

    def f(w, b):
        return np.logaddexp(0.0, -y * (X @ w + b)).sum() + 0.5 * (penalty * w * w).sum()

    cur = f(w, b)
    for _ in range(max_iter):
        u = X @ w + b
        q = sigmoid(-y * u)  # dual variable magnitude
        gw = -(X.T @ (y * q)) + penalty * w
        gb = -(y * q).sum()
        if np.sqrt(gw @ gw + gb * gb) <= tol:
            return w, b, True
        h = q * (1.0 - q)
        H = np.empty((s + 1, s + 1))
        Xh = X * h[:, None]
        H[:s, :s] = X.T @ Xh
        H[:s, :s][np.diag_indices(s)] += penalty
        H[:s, s] = H[s, :s] = Xh.sum(axis=0)
        H[s, s] = h.sum() + 1e-12
        step = _chol_solve(H, -np.append(gw, gb))
        t = 1.0
        for _ in range(40):
            nw, nb = w + t * step[:s], b + t * step[s]
            val = f(nw, nb)
            if val <= cur + 1e-4 * t * (step @ np.append(gw, gb)):
                break
            t *= 0.5
        w, b, cur = nw, nb, val
    return w, b, False


class InnerProblem:
    """Convex inner cost ``c(z)`` of the support-indicator reformulation.

    For a support indicator ``z`` in [0, 1]^p,
    ``c(z) = min_{w, b} sum l(y, Xw + b) + sum_j w_j^2 / (2 gamma z_j)``.
    It is convex and non-increasing in ``z``; its gradient is
    ``-(gamma / 2) (X_j' a)^2`` where ``a_i = -dl/du`` at the optimum.
    Squared loss is handled on centered data (the intercept is implicit).
    """

    def __init__(self, X, y, gamma: float, loss: Loss = Loss.SQUARED, gram_limit: int = 1500):
        self.loss = Loss(loss)
        self.gamma = float(gamma)
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        self.X_raw, self.y_raw = X, y
        self.n, self.p = X.shape
        if self.loss is Loss.SQUARED:
            self.x_mean = X.mean(axis=0)
            self.y_mean = float(y.mean())
            self.X = X - self.x_mean
            self.y = y - self.y_mean
            self.Xty = self.X.T @ self.y
            self.gram = self.X.T @ self.X if self.p <= gram_limit else None
        else:
            self.X, self.y = X, y
        self.evaluations = 0

    def _gram(self, S):
        if self.gram is not None:
            return self.gram[np.ix_(S, S)]
        XS = self.X[:, S]
        return XS.T @ XS

    def solve(self, S, z=None, warm=None):
        """Minimize over coefficients on support ``S`` with weights ``z[S]``.

        Returns ``(cost, w_S, intercept, alpha)``; ``alpha`` is the dual vector.
        """
        self.evaluations += 1
        S = np.asarray(S, dtype=np.intp)
        zS = np.ones(S.size) if z is None else np.asarray(z, dtype=float)[S]
        if self.loss is Loss.SQUARED:
            if S.size == 0:
                alpha = self.y.copy()
                return 0.5 * float(self.y @ alpha), np.zeros(0), self.y_mean, alpha
            if S.size <= self.n:
                A = self._gram(S)
                A[np.diag_indices(S.size)] += 1.0 / (self.gamma * zS)
                wS = _chol_solve(A, self.Xty[S])
                alpha = self.y - self.X[:, S] @ wS
            else:
                XS = self.X[:, S] * np.sqrt(self.gamma * zS)
                K = XS @ XS.T
                K[np.diag_indices(self.n)] += 1.0
                alpha = _chol_solve(K, self.y)
                wS = self.gamma * zS * (self.X[:, S].T @ alpha)
            cost = 0.5 * float(self.y @ alpha)
            b = self.y_mean - float(self.x_mean[S] @ wS)
            return cost, wS, b, alpha
        XS = self.X[:, S]
        w0, b0 = (None, 0.0) if warm is None else warm
        wS, b, _ = ridge_logistic(XS, self.y, 1.0 / (self.gamma * zS), w0=w0, b0=b0)
        u = XS @ wS + b
        cost = float(np.logaddexp(0.0, -self.y * u).sum() + 0.5 * (wS * wS / (self.gamma * zS)).sum())
        alpha = self.y * sigmoid(-self.y * u)
        return cost, wS, b, alpha

    def gradient(self, alpha) -> np.ndarray:
        r = self.X.T @ alpha
        return -0.5 * self.gamma * r * r

    def cost_and_gradient(self, S, z=None):
        cost, wS, b, alpha = self.solve(S, z)
        return cost, self.gradient(alpha), wS, b

    def solution(self, S, status="ok", gap=0.0, lower_bound=None, info=None) -> RegressorSolution:
        """Refit on support ``S`` and package with the shared objective."""
        S = np.sort(np.asarray(S, dtype=np.intp))
        _, wS, b, _ = self.solve(S)
        w = np.zeros(self.p)
        w[S] = wS
        obj = objective(self.X_raw, self.y_raw, w, b, self.gamma, self.loss)
        return RegressorSolution(
            w=w,
            support=np.flatnonzero(w),
            objective=obj,
            gap=gap,
            loss_kind=self.loss,
            gamma=self.gamma,
            intercept=b,
            lower_bound=lower_bound,
            status=status,
            info=dict(info or {}),
        )


def write_solution(sol: RegressorSolution, path: Union[str, Path], k=None, wall_time=None):
    """``index,coefficient`` rows after a one-line ``#`` metadata header."""
    meta = {
        "objective": "%.17g" % sol.objective,
        "gap": "%.17g" % sol.gap,
        "gamma": "%.17g" % sol.gamma,
        "k": str(sol.k if k is None else k),
        "intercept": "%.17g" % sol.intercept,
        "wall_time": "" if wall_time is None else "%.6f" % wall_time,
    }
    with open(path, "w") as fh:
        fh.write("# " + " ".join(f"{a}={b}" for a, b in meta.items()) + "\n")
        fh.write("index,coefficient\n")
        for j in sol.support:
            fh.write("%d,%.17g\n" % (j, sol.w[j]))


def read_solution(path: Union[str, Path], p: int) -> RegressorSolution:
    lines = Path(path).read_text().splitlines()
    meta = dict(item.split("=", 1) for item in lines[0].lstrip("# ").split())
    w = np.zeros(p)
    for line in lines[2:]:
        if line.strip():
            j, v = line.split(",")
            w[int(j)] = float(v)
    return RegressorSolution(
        w=w,
        support=np.flatnonzero(w),
        objective=float(meta["objective"]),
        gap=float(meta["gap"]),
        gamma=float(meta["gamma"]),
        intercept=float(meta.get("intercept", 0.0)),
    )
