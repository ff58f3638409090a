"""Sampling of subproblem feature sets."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from .data import ceil_fraction
from .errors import AllZeroUtilities
from .screening import MarginalUtilities


class SamplingMode(str, enum.Enum):
    SCREENING = "screening_sample"
    RANDOM = "random_sample"


@dataclass(frozen=True)
class SubproblemSpec:
    m: int
    features: np.ndarray
    rows: Optional[np.ndarray] = None  # None means every row


def derived_rng(seed: int, *path: int) -> np.random.Generator:
    """Independent stream for ``(seed, *path)``; does not depend on call order."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, path)]))


def sampling_weights(utilities: np.ndarray, mode: SamplingMode) -> np.ndarray:
    """exp(s/max s + 1) in screening mode, ones in random mode."""
    s = np.asarray(utilities, dtype=float)
    if SamplingMode(mode) is SamplingMode.RANDOM:
        return np.ones(s.size)
    top = s.max() if s.size else 0.0
    if not top > 0.0:
        warnings.warn("all utilities are zero; sampling uniformly", AllZeroUtilities, stacklevel=3)
        return np.ones(s.size)
    return np.exp(s / top + 1.0)


def weighted_sample(weights: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    """Positions of ``size`` items drawn without replacement, each draw proportional
    to the weights of the items still remaining.

    Uses exponential race keys ``E_j / w_j``; the ``size`` smallest keys have
    the same law as sequential renormalized draws.
    """
    keys = rng.standard_exponential(weights.size) / weights
    if size >= weights.size:
        return np.arange(weights.size)
    return np.sort(np.argpartition(keys, size)[:size]) if size > 0 else np.empty(0, dtype=np.intp)


def construct_subproblems(
    candidates,
    utilities: Union[MarginalUtilities, np.ndarray],
    M: int,
    beta: float,
    mode: Union[SamplingMode, str] = SamplingMode.SCREENING,
    seed: int = 0,
    n_rows: Optional[int] = None,
    row_fraction: float = 1.0,
) -> List[SubproblemSpec]:
    """Draw ``M`` feature sets of size ``ceil(beta |U|)`` from the candidate set ``U``.

    ``utilities`` is indexed by global feature id; only the entries in
    ``candidates`` are used and they are renormalized by their maximum.
    """
    U = np.asarray(candidates, dtype=np.intp)
    if U.size == 0:
        raise ValueError("candidate set is empty")
    if M < 1:
        raise ValueError("need at least one subproblem")
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    s = utilities.s if isinstance(utilities, MarginalUtilities) else np.asarray(utilities, dtype=float)
    weights = sampling_weights(s[U], mode)
    size = ceil_fraction(beta, U.size)
    specs = []
    for m in range(M):
        rng = derived_rng(seed, m)
        feats = U[weighted_sample(weights, size, rng)]
        rows = None
        if row_fraction < 1.0:
            if n_rows is None:
                raise ValueError("row subsampling needs n_rows")
            rows = np.sort(rng.choice(n_rows, size=max(1, ceil_fraction(row_fraction, n_rows)), replace=False))
        specs.append(SubproblemSpec(m, np.sort(feats), rows))
    return specs


def write_subproblems(specs: List[SubproblemSpec], path: Union[str, Path]):
    """One CSV row per subproblem: ``m`` followed by its feature indices."""
    with open(path, "w") as fh:
        for spec in specs:
            fh.write(",".join([str(spec.m)] + [str(int(j)) for j in spec.features]) + "\n")


def read_subproblems(path: Union[str, Path]) -> List[SubproblemSpec]:
    specs = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            parts = [int(v) for v in line.split(",")]
            specs.append(SubproblemSpec(parts[0], np.array(parts[1:], dtype=np.intp)))
    return specs
