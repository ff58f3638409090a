"""Synthetic ground-truth generators: AR(1)-correlated Gaussian designs with
planted sparse linear, logistic and tree responses."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .data import Dataset, Task
from .errors import DegenerateSignal, InfeasibleConfig
from .trees.model import Branch, DecisionTree, Leaf, dumps, predict


@dataclass(frozen=True)
class LinearGroundTruth:
    w_true: np.ndarray
    support: np.ndarray
    snr: float
    rho: float
    sigma: float  # realized noise scale, ||eps|| / sqrt(n)

    @property
    def k(self) -> int:
        return int(self.support.size)


@dataclass(frozen=True)
class TreeGenConfig:
    depth: int
    k: int
    r: int = 1
    f: float = 0.5
    n_classes: int = 2

    def __post_init__(self):
        if self.depth < 1:
            raise InfeasibleConfig("tree depth must be at least 1")
        if self.r < 1 or self.k < 1:
            raise InfeasibleConfig("k and r must be positive")
        if self.k * self.r > 2**self.depth - 1:
            raise InfeasibleConfig(
                f"k={self.k} features with r={self.r} occurrences each do not fit "
                f"in {2**self.depth - 1} branch nodes"
            )
        if not 0.0 <= self.f <= 1.0:
            raise InfeasibleConfig("balance parameter f must lie in [0, 1]")
        if self.n_classes < 2:
            raise InfeasibleConfig("need at least two classes")


@dataclass(frozen=True)
class TreeGroundTruth:
    tree: DecisionTree
    relevant: np.ndarray


def _streams(seed, count):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def gen_design(n: int, p: int, rho: float, seed: int = 0) -> np.ndarray:
    """Rows iid N(0, S) with S_ij = rho^|i-j|, via the AR(1) recurrence along columns."""
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must lie in [0, 1)")
    X = np.random.default_rng(seed).standard_normal((n, p))
    if rho > 0.0:
        s = np.sqrt(1.0 - rho * rho)
        for j in range(1, p):
            X[:, j] = rho * X[:, j - 1] + s * X[:, j]
    return X


def _planted_signal(n, p, k, rho, snr, seed):
    if not 1 <= k <= p:
        raise ValueError("need 1 <= k <= p")
    if snr <= 0:
        raise ValueError("snr must be positive")
    r_design, r_support, r_noise = _streams(seed, 3)
    X = gen_design(n, p, rho, int(r_design.integers(2**63)))
    support = np.sort(r_support.choice(p, size=k, replace=False))
    w = np.zeros(p)
    w[support] = r_support.choice((-1.0, 1.0), size=k)
    signal = X @ w
    norm = np.linalg.norm(signal)
    if norm == 0.0:
        raise DegenerateSignal("X @ w_true is identically zero")
    eps = r_noise.standard_normal(n)
    eps *= norm / (np.sqrt(snr) * np.linalg.norm(eps))
    truth = LinearGroundTruth(w, support, float(snr), float(rho), float(np.linalg.norm(eps) / np.sqrt(n)))
    return X, signal, eps, truth


def gen_linear(n: int, p: int, k: int, rho: float, snr: float, seed: int = 0):
    """y = X w_true + eps with ||X w_true|| / ||eps|| = sqrt(snr) exactly.

    Returns
    -------
    (Dataset, LinearGroundTruth)
    """
    X, signal, eps, truth = _planted_signal(n, p, k, rho, snr, seed)
    return Dataset(X, signal + eps, Task.REGRESSION), truth


def gen_logistic(n: int, p: int, k: int, rho: float, snr: float, seed: int = 0):
    """Labels sign(X w_true + eps) with sign(0) := +1; noise scaled as in :func:`gen_linear`."""
    X, signal, eps, truth = _planted_signal(n, p, k, rho, snr, seed)
    y = np.where(signal + eps >= 0.0, 1.0, -1.0)
    return Dataset(X, y, Task.BINARY), truth


def gen_tree_data(n: int, p: int, cfg: TreeGenConfig, rho: float, seed: int = 0):
    """Sample a full binary ground-truth tree of depth ``cfg.depth`` and label X with it.

    Branch features are assigned round-robin over the relevant set and then
    shuffled, so each relevant feature appears at least ``cfg.r`` times.
    Thresholds are uniform on the f-shrunk empirical range of the feature,
    intersected with the interval implied by the ancestors' splits; if that
    intersection is empty the shrinkage is halved until it is not.
    """
    if p < cfg.k:
        raise InfeasibleConfig("p must be at least the number of relevant features")
    r_design, r_struct, r_thresh, r_labels = _streams(seed, 4)
    X = gen_design(n, p, rho, int(r_design.integers(2**63)))
    relevant = np.sort(r_struct.choice(p, size=cfg.k, replace=False))
    n_branch = 2**cfg.depth - 1
    slots = np.array([relevant[i % cfg.k] for i in range(n_branch)])
    r_struct.shuffle(slots)
    lo_range, hi_range = X.min(axis=0), X.max(axis=0)

    if cfg.n_classes == 2:
        classes = (-1.0, 1.0)
    else:
        classes = tuple(float(c) for c in range(1, cfg.n_classes + 1))

    def draw_threshold(j, bounds):
        lo, hi = bounds.get(j, (lo_range[j], hi_range[j]))
        width = hi_range[j] - lo_range[j]
        f = cfg.f
        while True:
            a = max(lo, lo_range[j] + 0.5 * width * f)
            b = min(hi, hi_range[j] - 0.5 * width * f)
            if a <= b or f < 1e-12:
                break
            f *= 0.5
        if a > b:
            a, b = lo, hi
        return float(r_thresh.uniform(a, b))

    # nodes in heap order: node i has children 2i+1, 2i+2
    def build(i, level, bounds):
        if level == cfg.depth:
            return None
        j = int(slots[i])
        b = draw_threshold(j, bounds)
        lo, hi = bounds.get(j, (lo_range[j], hi_range[j]))
        left = build(2 * i + 1, level + 1, {**bounds, j: (lo, b)})
        right = build(2 * i + 2, level + 1, {**bounds, j: (b, hi)})
        if left is None:
            pair = r_labels.choice(len(classes), size=2, replace=False)
            k_cls = len(classes)
            left = Leaf(classes[pair[0]], np.zeros(k_cls))
            right = Leaf(classes[pair[1]], np.zeros(k_cls))
        return Branch(j, b, left, right)

    tree = DecisionTree(build(0, 0, {}), classes)
    y = predict(tree, X)
    ids, leaves = tree.apply(X)
    for li, leaf in enumerate(leaves):
        members = y[ids == li]
        leaf.counts = np.array([np.sum(members == c) for c in classes], dtype=float)
    task = Task.BINARY if cfg.n_classes == 2 else Task.MULTICLASS
    return Dataset(X, y, task), TreeGroundTruth(tree, relevant)


def sample_from_tree(truth: TreeGroundTruth, n: int, p: int, rho: float, seed: int = 0) -> Dataset:
    """Fresh design labelled by an existing ground-truth tree (for test sets)."""
    X = gen_design(n, p, rho, seed)
    task = Task.BINARY if len(truth.tree.classes) == 2 else Task.MULTICLASS
    return Dataset(X, predict(truth.tree, X), task)


def write_linear_truth(truth: LinearGroundTruth, path: Union[str, Path]):
    """Sidecar CSV: one ``index,sign`` row per support feature."""
    with open(path, "w") as fh:
        fh.write("index,sign\n")
        for j in truth.support:
            fh.write(f"{int(j)},{int(truth.w_true[j])}\n")


def read_linear_support(path: Union[str, Path]) -> np.ndarray:
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return rows[:, 0].astype(int)


def write_tree_truth(truth: TreeGroundTruth, path: Union[str, Path]):
    Path(path).write_text(dumps(truth.tree))
