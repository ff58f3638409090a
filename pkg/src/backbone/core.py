"""Hierarchical backbone construction and the reduced-problem solve.

``run_backbone`` screens once, then repeatedly samples subproblems from the
current candidate set, fits each one, and replaces the candidates by the
union of the features the fits selected.  Iteration ``t`` (counting from 0)
uses ``ceil(M / 2**t)`` subproblems.  The loop ends when the union has at
most ``B_max`` features or the iteration bound is reached; the final model
is fitted on the union only.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from .data import Dataset
from .errors import ContractViolation, EmptyBackbone
from .screening import Loss, MarginalUtilities, screen, top_indices
from .sparse.objective import RegressorSolution
from .subproblems import SamplingMode, SubproblemSpec, construct_subproblems
from .trees.model import DecisionTree, remap_features


@dataclass(frozen=True)
class BackboneConfig:
    M: int = 10
    alpha: Optional[float] = None  # None: keep about 10 n features
    beta: float = 0.5
    B_max: int = 50
    k_max: int = 10
    sampling_mode: SamplingMode = SamplingMode.SCREENING
    loss: Optional[Loss] = None
    seed: int = 0
    early_stop: bool = False
    row_fraction: float = 1.0
    # return the screened set as the backbone without sampling when it is already small enough
    skip_construction_when_small: bool = False

    def __post_init__(self):
        if self.M < 1 or self.B_max < 1 or self.k_max < 1:
            raise ValueError("M, B_max and k_max must be positive")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError("beta must lie in (0, 1]")
        if self.alpha is not None and not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        object.__setattr__(self, "sampling_mode", SamplingMode(self.sampling_mode))


@dataclass
class SubproblemRecord:
    iteration: int
    m: int
    features: np.ndarray  # sampled feature set P_m (global indices)
    selected: np.ndarray  # extracted relevant features (global indices)


@dataclass
class BackboneResult:
    backbone: np.ndarray
    iterations_used: int
    H_bound: int
    per_subproblem: List[SubproblemRecord]
    final_model: object = None
    timings: dict = field(default_factory=dict)
    termination_reason: str = ""
    screened: Optional[np.ndarray] = None
    utilities: Optional[MarginalUtilities] = None
    flags: dict = field(default_factory=dict)


def h_bound(M: int, k_max: int, B_max: int) -> int:
    """Iteration cap ``ceil(log2(M k_max / B_max) + 1)``, at least 1."""
    return max(1, math.ceil(math.log2(M * k_max / B_max) + 1.0))


def subproblem_seed(seed: int, iteration: int) -> int:
    """Sampling seed of one hierarchy iteration, independent of execution order."""
    return int(np.random.SeedSequence([int(seed), int(iteration)]).generate_state(1)[0])


def expand_solution(sol: RegressorSolution, columns, p: int) -> RegressorSolution:
    """Coefficients of a reduced fit embedded into a length-``p`` vector."""
    w = np.zeros(p)
    w[np.asarray(columns, dtype=np.intp)] = sol.w
    return RegressorSolution(
        w=w,
        support=np.flatnonzero(w),
        objective=sol.objective,
        gap=sol.gap,
        loss_kind=sol.loss_kind,
        gamma=sol.gamma,
        intercept=sol.intercept,
        lower_bound=sol.lower_bound,
        status=sol.status,
        info=dict(sol.info),
    )


def _run_one(task):
    fit_subproblem, extract_relevant, d_sub, seed = task
    model = fit_subproblem(d_sub, seed)
    return np.asarray(sorted(extract_relevant(model)), dtype=np.intp)


def run_backbone(
    d: Dataset,
    cfg: BackboneConfig,
    fit_subproblem: Callable,
    extract_relevant: Callable,
    fit_final: Optional[Callable] = None,
    executor=None,
) -> BackboneResult:
    """Screen, build the backbone hierarchically, then fit on the backbone.

    Parameters
    ----------
    fit_subproblem : callable ``(Dataset, seed) -> model``
        Fits one subproblem; the dataset holds only the sampled columns.
    extract_relevant : callable ``model -> iterable of column positions``
        Positions refer to the subproblem's columns and must number at most
        ``cfg.k_max``.
    fit_final : callable ``Dataset -> model``, optional
        Fits the reduced problem on the backbone columns.  Regression
        solutions and trees are mapped back to full feature indices.
    executor : concurrent.futures.Executor, optional
        Runs the subproblems of an iteration concurrently.  Results do not
        depend on it.

    Raises
    ------
    ContractViolation
        If a subproblem returns more than ``k_max`` relevant features.
    """
    timings = {}
    t0 = time.perf_counter()
    screened, mu = screen(d, cfg.alpha, cfg.loss)
    timings["screening"] = time.perf_counter() - t0

    H = h_bound(cfg.M, cfg.k_max, cfg.B_max)
    records: List[SubproblemRecord] = []
    flags = {"empty_backbone": False, "early_stop_iterations": []}
    candidates = screened
    backbone = screened
    reason = ""
    iterations = 0
    t0 = time.perf_counter()
    if cfg.skip_construction_when_small and screened.size <= cfg.B_max:
        reason = "screened_set_small"
    else:
        for t in range(H):
            iterations = t + 1
            M_t = math.ceil(cfg.M / 2**t)
            specs = construct_subproblems(
                candidates, mu, M_t, cfg.beta, cfg.sampling_mode, subproblem_seed(cfg.seed, t),
                n_rows=d.n, row_fraction=cfg.row_fraction,
            )
            selected = _fit_iteration(d, cfg, specs, t, fit_subproblem, extract_relevant, executor, flags)
            for spec, sel in zip(specs, selected):
                records.append(SubproblemRecord(t, spec.m, spec.features, sel))
            union = np.unique(np.concatenate(selected)) if selected else np.empty(0, dtype=np.intp)
            if union.size == 0:
                warnings.warn("no subproblem selected any feature; using the top screened features",
                              EmptyBackbone, stacklevel=2)
                flags["empty_backbone"] = True
                order = top_indices(mu.s[screened], min(cfg.B_max, screened.size))
                union = screened[order]
                backbone = union
                reason = "empty_backbone"
                break
            backbone = union
            if union.size <= cfg.B_max:
                reason = "size"
                break
            candidates = union
        else:
            reason = "iteration_bound"
    timings["construction"] = time.perf_counter() - t0

    final = None
    if fit_final is not None:
        t0 = time.perf_counter()
        final = fit_final(d.subset(cols=backbone))
        if isinstance(final, RegressorSolution):
            final = expand_solution(final, backbone, d.p)
        elif isinstance(final, DecisionTree):
            final = remap_features(final, backbone)
        timings["final"] = time.perf_counter() - t0
    return BackboneResult(
        backbone=np.asarray(backbone, dtype=np.intp),
        iterations_used=iterations,
        H_bound=H,
        per_subproblem=records,
        final_model=final,
        timings=timings,
        termination_reason=reason,
        screened=screened,
        utilities=mu,
        flags=flags,
    )


def _fit_iteration(d, cfg, specs: Sequence[SubproblemSpec], t, fit_subproblem, extract_relevant, executor, flags):
    """Selected global features per subproblem, in subproblem order.

    With ``early_stop`` the list is cut after two consecutive subproblems
    that add nothing to the running union; the cut is applied in subproblem
    order so it does not depend on the executor.
    """

    def task(spec):
        seed = subproblem_seed(cfg.seed, 1_000_003 * (t + 1) + spec.m)
        d_sub = d.subset(rows=spec.rows, cols=spec.features)
        return fit_subproblem, extract_relevant, d_sub, seed

    def globalize(spec, local):
        if local.size > cfg.k_max:
            raise ContractViolation(
                f"subproblem {spec.m} of iteration {t} returned {local.size} features; k_max is {cfg.k_max}"
            )
        if local.size and (local.min() < 0 or local.max() >= spec.features.size):
            raise ContractViolation(f"subproblem {spec.m} returned an out-of-range column")
        return spec.features[local]

    selected = []
    seen = set()
    idle = 0
    if executor is not None:
        results = list(executor.map(_run_one, [task(s) for s in specs]))
    else:
        results = None
    for i, spec in enumerate(specs):
        local = results[i] if results is not None else _run_one(task(spec))
        sel = globalize(spec, local)
        selected.append(sel)
        new = set(sel.tolist()) - seen
        seen |= new
        idle = 0 if new else idle + 1
        if cfg.early_stop and idle >= 2 and i + 1 < len(specs):
            flags["early_stop_iterations"].append(t)
            break
    return selected


# hyperparameter advice -------------------------------------------------------


@dataclass(frozen=True)
class Advice:
    alpha: float
    M: int
    sample_bound: float
    sample_ok: bool


def recommend_hyperparameters(
    n: int,
    p: int,
    k_guess: int,
    beta: float,
    p_sub_estimate: float = 0.1,
    phi: float = 0.5,
    variant: str = "theorem",
    sigma2: float = 1.0,
    theta: Optional[float] = None,
) -> Advice:
    """Screening fraction and subproblem count from the asymptotic recovery rule.

    ``alpha = min(1, n**(1 - phi) / p)``.  The ``"theorem"`` variant uses
    ``M = ceil(log(alpha p k) / log(1 / (1 - beta + beta p_sub)))`` (at least
    1; exactly 1 when the denominator is infinite).  The ``"experimental"``
    variant uses ``M = ceil(5 + log(alpha p k) / (5 log(1 / (1 - beta))))``.

    ``sample_bound = theta (sigma2 + 2k) log(beta alpha p)`` is the advisory
    sample size for subproblem recovery, with ``theta = log(alpha p)`` unless
    given; ``sample_ok`` compares it with ``n``.  The constants are not
    determined by the theory and are user inputs.
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    if not 0.0 <= p_sub_estimate < 1.0:
        raise ValueError("p_sub_estimate must lie in [0, 1)")
    if phi >= 1.0:
        raise ValueError("phi must be below 1")
    alpha = min(1.0, n ** (1.0 - phi) / p)
    size = max(alpha * p * k_guess, 1.0)
    if variant == "theorem":
        miss = 1.0 - beta + beta * p_sub_estimate
        if miss <= 0.0:
            M = 1
        else:
            M = max(1, math.ceil(math.log(size) / math.log(1.0 / miss) - 1e-12))
    elif variant == "experimental":
        if beta >= 1.0:
            M = 5
        else:
            M = math.ceil(5.0 + math.log(size) / (5.0 * math.log(1.0 / (1.0 - beta))) - 1e-12)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    if theta is None:
        theta = max(math.log(alpha * p), 1.0)
    bound = theta * (sigma2 + 2.0 * k_guess) * math.log(max(beta * alpha * p, 1.0 + 1e-12))
    return Advice(alpha, int(M), bound, n >= bound)


# diagnostics -----------------------------------------------------------------


@dataclass
class Diagnostics:
    per_subproblem: np.ndarray  # share of the truth selected by subproblem m
    cumulative: np.ndarray  # share of the truth selected by subproblems 1..m
    sampled: np.ndarray  # share of the truth present in P_m
    sampled_cumulative: np.ndarray  # share of the truth present in P_1 ... P_m


def backbone_diagnostics(result: BackboneResult, truth) -> Diagnostics:
    """Support-recovery curves over the subproblems in execution order.

    An empty truth counts as fully recovered.
    """
    truth = set(int(j) for j in truth)
    k = len(truth)
    per, cum, smp, smp_cum = [], [], [], []
    seen_sel, seen_smp = set(), set()
    for rec in result.per_subproblem:
        sel = set(rec.selected.tolist()) & truth
        got = set(rec.features.tolist()) & truth
        seen_sel |= sel
        seen_smp |= got
        denom = max(k, 1)
        per.append(len(sel) / denom if k else 1.0)
        cum.append(len(seen_sel) / denom if k else 1.0)
        smp.append(len(got) / denom if k else 1.0)
        smp_cum.append(len(seen_smp) / denom if k else 1.0)
    return Diagnostics(np.array(per), np.array(cum), np.array(smp), np.array(smp_cum))


def write_provenance(result: BackboneResult, path: Union[str, Path], extra: Optional[dict] = None):
    """Long CSV of sampled features per subproblem plus a ``#`` summary line."""
    with open(path, "w") as fh:
        fh.write("iteration,subproblem,feature,selected\n")
        for rec in result.per_subproblem:
            chosen = set(rec.selected.tolist())
            for j in rec.features:
                fh.write(f"{rec.iteration},{rec.m},{int(j)},{int(int(j) in chosen)}\n")
        summary = {
            "screened": 0 if result.screened is None else result.screened.size,
            "backbone": result.backbone.size,
            "iterations": result.iterations_used,
            "H_bound": result.H_bound,
            "reason": result.termination_reason,
        }
        summary.update({f"time_{k}": f"{v:.6f}" for k, v in result.timings.items()})
        if isinstance(result.final_model, RegressorSolution):
            summary["gap"] = "%.6g" % result.final_model.gap
        summary.update(extra or {})
        fh.write("# " + " ".join(f"{k}={v}" for k, v in summary.items()) + "\n")
