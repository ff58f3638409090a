"""Dataset container, standardization, CSV I/O, holdout splits and noisy-feature expansion."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import MissingValue, ParseError, ZeroVarianceColumn


class Task(str, enum.Enum):
    REGRESSION = "regression"
    BINARY = "binary"
    MULTICLASS = "multiclass"


@dataclass(frozen=True, eq=False)
class Dataset:
    """Dense design matrix plus response.

    ``X`` is stored row-major (C order); use :meth:`column` for a column view.
    Binary labels are always coded as -1/+1.
    """

    X: np.ndarray
    y: np.ndarray
    task: Task = Task.REGRESSION
    feature_names: Optional[tuple] = None

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        if X.ndim != 2:
            raise ValueError("X must be two-dimensional")
        n, p = X.shape
        if n < 1 or p < 1:
            raise ValueError("dataset needs at least one row and one column")
        if y.shape[0] != n:
            raise ValueError(f"X has {n} rows but y has {y.shape[0]} entries")
        task = Task(self.task)
        if task is Task.BINARY and not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("binary labels must be in {-1, +1}")
        names = self.feature_names
        if names is not None:
            names = tuple(str(s) for s in names)
            if len(names) != p:
                raise ValueError("feature_names must have one entry per column")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "task", task)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def is_classification(self) -> bool:
        return self.task is not Task.REGRESSION

    def column(self, j: int) -> np.ndarray:
        return self.X[:, j]

    def subset(self, rows=None, cols=None) -> "Dataset":
        """Restrict to the given row and/or column indices (in the given order)."""
        X, y, names = self.X, self.y, self.feature_names
        if rows is not None:
            rows = np.asarray(rows, dtype=np.intp)
            X, y = X[rows], y[rows]
        if cols is not None:
            cols = np.asarray(cols, dtype=np.intp)
            X = X[:, cols]
            if names is not None:
                names = tuple(names[j] for j in cols)
        return Dataset(X, y, self.task, names)


@dataclass(frozen=True)
class StandardizationStats:
    means: np.ndarray
    scales: np.ndarray
    response_mean: float = 0.0
    response_scale: float = 1.0

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.means) / self.scales

    def inverse_response(self, y_std: np.ndarray) -> np.ndarray:
        return np.asarray(y_std) * self.response_scale + self.response_mean

    def unscale_coefficients(self, w: np.ndarray, intercept: float = 0.0):
        """Map coefficients fitted on standardized data back to the raw scale."""
        w_raw = self.response_scale * np.asarray(w) / self.scales
        b_raw = self.response_mean + self.response_scale * intercept - float(w_raw @ self.means)
        return w_raw, b_raw


@dataclass(frozen=True)
class SplitIndices:
    train: np.ndarray
    validation: np.ndarray


def standardize(d: Dataset):
    """Center and scale every column to mean 0 and population variance 1.

    The response is centered for regression and left untouched for
    classification.

    Returns
    -------
    (Dataset, StandardizationStats)

    Raises
    ------
    ZeroVarianceColumn
        If any column is constant.
    """
    X = d.X
    const = np.flatnonzero(np.ptp(X, axis=0) == 0)
    if const.size:
        raise ZeroVarianceColumn(int(const[0]))
    means = X.mean(axis=0)
    scales = X.std(axis=0)
    Xs = (X - means) / scales
    if d.task is Task.REGRESSION:
        ym = float(d.y.mean())
        ys = d.y - ym
    else:
        ym, ys = 0.0, d.y
    stats = StandardizationStats(means, scales, ym, 1.0)
    return Dataset(Xs, ys, d.task, d.feature_names), stats


def _resolve_column(response_column, header):
    if isinstance(response_column, str):
        if header is None:
            raise ValueError("a named response column requires a header row")
        if response_column not in header:
            raise ValueError(f"response column {response_column!r} not in header")
        return header.index(response_column)
    return int(response_column)


def load_csv(
    path: Union[str, Path],
    response_column: Union[str, int] = -1,
    task: Union[Task, str] = Task.REGRESSION,
    header: bool = False,
    delimiter: str = ",",
) -> Dataset:
    """Read a numeric CSV file into a :class:`Dataset`.

    Row and column positions reported in errors are 1-based file lines and
    1-based fields.
    """
    task = Task(task)
    names = None
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        for lineno, fields in enumerate(reader, start=1):
            if header and names is None:
                names = [f.strip() for f in fields]
                continue
            if not fields or all(not f.strip() for f in fields):
                continue
            values = []
            for col, cell in enumerate(fields, start=1):
                cell = cell.strip()
                if cell == "" or cell.lower() in ("na", "nan"):
                    raise MissingValue("missing value", lineno, col)
                try:
                    values.append(float(cell))
                except ValueError:
                    raise ParseError(f"non-numeric cell {cell!r}", lineno, col) from None
            if rows and len(values) != len(rows[0][1]):
                raise ParseError(
                    f"expected {len(rows[0][1])} fields, found {len(values)}", lineno, len(values)
                )
            rows.append((lineno, values))
    if not rows:
        raise ParseError("file contains no data rows")
    table = np.array([v for _, v in rows], dtype=float)
    ncol = table.shape[1]
    rc = _resolve_column(response_column, names) % ncol
    keep = [j for j in range(ncol) if j != rc]
    y = table[:, rc]
    if task is Task.BINARY:
        labels = np.unique(y)
        if labels.size == 2 and not np.array_equal(labels, [-1.0, 1.0]):
            y = np.where(y == labels[1], 1.0, -1.0)
    feature_names = [names[j] for j in keep] if names is not None else None
    return Dataset(table[:, keep], y, task, feature_names)


def write_csv(d: Dataset, path: Union[str, Path], header: bool = True, response_name: str = "y"):
    """Write features then response, 17 significant digits per value."""
    names = list(d.feature_names) if d.feature_names else [f"x{j}" for j in range(d.p)]
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(",".join(names + [response_name]) + "\n")
        for row, yi in zip(d.X, d.y):
            fh.write(",".join("%.17g" % v for v in row) + ",%.17g\n" % yi)


def holdout_split(d: Union[Dataset, int], ratio: float = 0.7, seed: int = 0) -> SplitIndices:
    """Uniformly random train/validation partition, deterministic in ``seed``."""
    n = d if isinstance(d, (int, np.integer)) else d.n
    if n < 2:
        raise ValueError("holdout_split needs at least two samples")
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must lie in (0, 1)")
    n_train = min(max(int(round(ratio * n)), 1), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    return SplitIndices(np.sort(perm[:n_train]), np.sort(perm[n_train:]))


def permute_expand(d: Dataset, copies: int, seed: int = 0):
    """Append ``copies`` independent row-permutations of every original column.

    Returns the expanded dataset and a boolean mask that is True on the
    original columns (always the first ``p``).
    """
    if copies < 0:
        raise ValueError("copies must be non-negative")
    n, p = d.X.shape
    rng = np.random.default_rng(seed)
    blocks = [d.X]
    for _ in range(copies):
        block = np.empty_like(d.X)
        for j in range(p):
            block[:, j] = d.X[rng.permutation(n), j]
        blocks.append(block)
    names = None
    if d.feature_names is not None:
        names = list(d.feature_names) + [
            f"{d.feature_names[j]}_perm{c}" for c in range(1, copies + 1) for j in range(p)
        ]
    mask = np.zeros(p * (copies + 1), dtype=bool)
    mask[:p] = True
    return Dataset(np.hstack(blocks), d.y, d.task, names), mask


def ceil_fraction(fraction: float, total: int) -> int:
    """``ceil(fraction * total)`` robust to floating error (0.1 * 30 -> 3, not 4)."""
    return int(math.ceil(fraction * total - 1e-9))
