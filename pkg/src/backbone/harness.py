"""Experiment orchestration: data, method, metrics and the long-form results table.

Each seed is an independent job.  Seeds can run in worker processes; rows
are sorted by seed before writing, so the results file does not depend on
the worker count.  Wall-clock timings go to a separate sidecar file for the
same reason.
"""

from __future__ import annotations

import csv
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from . import __version__
from .config import ExperimentConfig, Kind, Method
from .core import BackboneConfig, expand_solution
from .data import Dataset, Task, holdout_split, load_csv, permute_expand, standardize
from .errors import BackboneError
from .metrics import auc, r2, support_metrics, tree_structure_metrics
from .pipelines import CartSubproblem, ExactFinal, LocalSearchFinal, TreeGrid, regression_backbone, tree_backbone
from .screening import screen
from .sparse.objective import RegressorSolution
from .sparse.tuning import elastic_net_cv
from .synth import TreeGenConfig, gen_linear, gen_logistic, gen_tree_data
from .trees.cart import TreeParams
from .trees.model import DecisionTree, positive_scores

VERSION = f"v{__version__}"
COLUMNS = ("experiment", "config_hash", "version", "seed", "metric", "value")


@dataclass
class SeedData:
    train: Dataset
    test: Dataset
    raw_test_X: np.ndarray
    truth: Optional[np.ndarray] = None  # planted support / relevant tree features
    truth_tree: Optional[DecisionTree] = None
    original: Optional[np.ndarray] = None  # columns before permutation expansion


@dataclass
class SeedOutcome:
    seed: int
    metrics: List[Tuple[str, float]] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)
    error: Optional[str] = None


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    outcomes: List[SeedOutcome]

    @property
    def failed(self) -> List[int]:
        return [o.seed for o in self.outcomes if o.error is not None]

    def rows(self) -> List[Tuple[str, str, str, str, str, str]]:
        """Per-seed rows in seed order, then ``mean`` and ``std`` rows per metric."""
        cfg = self.config
        head = (cfg.name, cfg.hash(), VERSION)
        out = []
        for o in sorted(self.outcomes, key=lambda o: o.seed):
            if o.error is not None:
                out.append(head + (str(o.seed), "error", o.error))
                continue
            out.extend(head + (str(o.seed), m, fmt(v)) for m, v in o.metrics)
        for name, values in aggregate_inputs(self.outcomes).items():
            mean, std = mean_std(values)
            out.append(head + ("mean", name, fmt(mean)))
            out.append(head + ("std", name, fmt(std)))
        return out


def fmt(v) -> str:
    return "%.17g" % float(v)


def aggregate_inputs(outcomes) -> Dict[str, List[float]]:
    """Metric values of the successful seeds, metrics in first-seen order."""
    values: Dict[str, List[float]] = {}
    for o in sorted(outcomes, key=lambda o: o.seed):
        if o.error is None:
            for m, v in o.metrics:
                values.setdefault(m, []).append(float(v))
    return values


def mean_std(values) -> Tuple[float, float]:
    """Mean and sample standard deviation (0 for a single value)."""
    a = np.asarray(values, dtype=float)
    return float(a.mean()), float(a.std(ddof=1)) if a.size > 1 else 0.0


# data ------------------------------------------------------------------------


def _standardized(train: Dataset, test: Dataset, raw_test_X):
    train_s, stats = standardize(train)
    y_test = test.y - stats.response_mean if test.task is Task.REGRESSION else test.y
    test_s = Dataset(stats.transform(test.X), y_test, test.task, test.feature_names)
    return train_s, test_s, raw_test_X


def make_data(cfg: ExperimentConfig, seed: int) -> SeedData:
    """Training and test sets of one seed; synthetic test rows come from the same generator call."""
    if cfg.kind is Kind.REAL_CSV:
        column = int(cfg.response_column) if cfg.response_column.lstrip("-").isdigit() else cfg.response_column
        d = load_csv(cfg.csv_path, column, cfg.csv_task, header=cfg.csv_header)
        original = None
        if cfg.expand_copies > 0:
            d, mask = permute_expand(d, cfg.expand_copies, seed)
            original = np.flatnonzero(mask)
        sp = holdout_split(d, 1.0 - cfg.test_fraction, seed)
        train, test = d.subset(sp.train), d.subset(sp.validation)
        return SeedData(*_standardized(train, test, test.X), original=original)
    total = cfg.n + cfg.n_test
    tree = None
    if cfg.kind is Kind.SYNTH_LINEAR:
        d, gt = gen_linear(total, cfg.p, cfg.k, cfg.rho, cfg.snr, seed)
        truth = gt.support
    elif cfg.kind is Kind.SYNTH_LOGISTIC:
        d, gt = gen_logistic(total, cfg.p, cfg.k, cfg.rho, cfg.snr, seed)
        truth = gt.support
    else:
        tcfg = TreeGenConfig(cfg.depth, cfg.k, cfg.r, cfg.f, cfg.n_classes)
        d, gt = gen_tree_data(total, cfg.p, tcfg, cfg.rho, seed)
        truth, tree = gt.relevant, gt.tree
    train = d.subset(np.arange(cfg.n))
    test = d.subset(np.arange(cfg.n, total))
    return SeedData(*_standardized(train, test, test.X), truth=np.asarray(truth), truth_tree=tree)


# methods ---------------------------------------------------------------------


def _sr_k(cfg: ExperimentConfig) -> int:
    return cfg.sr_k if cfg.sr_k is not None else cfg.k


def backbone_config(cfg: ExperimentConfig, seed: int, k_max: Optional[int] = None) -> BackboneConfig:
    return BackboneConfig(
        M=cfg.M, alpha=cfg.alpha, beta=cfg.beta, B_max=cfg.B_max, k_max=k_max or cfg.k_max,
        sampling_mode=cfg.sampling_mode, seed=seed, early_stop=cfg.early_stop,
        skip_construction_when_small=cfg.skip_small,
    )


def tree_params(cfg: ExperimentConfig, depth: Optional[int] = None) -> TreeParams:
    return TreeParams(depth or cfg.tree_depth, cfg.min_bucket, cfg.complexity)


def tree_grid(cfg: ExperimentConfig) -> Optional[TreeGrid]:
    """Holdout grid over minimum leaf size and complexity, or None for fixed parameters."""
    if not cfg.tree_cv:
        return None
    return TreeGrid(min_buckets=cfg.nmin_grid, complexities=cfg.complexity_grid)


def run_method(cfg: ExperimentConfig, data: SeedData, seed: int):
    """Fit the configured method; returns ``(model, extra metrics)``."""
    d = data.train
    extra: List[Tuple[str, float]] = []
    m = cfg.method
    if m is Method.BACKBONE:
        if cfg.is_tree_kind:
            sub_depth = cfg.sub_depth or cfg.tree_depth
            bcfg = backbone_config(cfg, seed, k_max=2**sub_depth - 1)
            grid = tree_grid(cfg)
            res = tree_backbone(d, bcfg, tree_params(cfg, sub_depth), tree_params(cfg), cfg.restarts, seed,
                                sub_grid=grid, final_grid=grid)
        else:
            res = regression_backbone(d, backbone_config(cfg, seed), _sr_k(cfg), cfg.subproblem_solver,
                                      cfg.gamma, cfg.time_limit)
        extra.append(("backbone_size", res.backbone.size))
        extra.append(("iterations", res.iterations_used))
        if data.truth is not None:
            extra.append(("backbone_sr_acc", support_metrics(res.backbone, data.truth).sr_acc))
        return res.final_model, extra
    if m is Method.SIS_ENET:
        screened, _ = screen(d, cfg.alpha)
        _, sol = elastic_net_cv(d.subset(cols=screened), cfg.enet_mus, _sr_k(cfg), cfg.enet_grid, seed=seed)
        return expand_solution(sol, screened, d.p), extra
    if m is Method.EXACT_SR:
        screened, _ = screen(d, cfg.alpha)
        sol = ExactFinal(_sr_k(cfg), cfg.gamma, cfg.time_limit)(d.subset(cols=screened))
        return expand_solution(sol, screened, d.p), extra
    if m is Method.CART:
        return CartSubproblem(tree_params(cfg), tree_grid(cfg))(d, seed), extra
    if m is Method.OCT_LOCAL_SEARCH:
        return LocalSearchFinal(tree_params(cfg), cfg.restarts, seed, tree_grid(cfg))(d), extra
    # oracle
    if data.truth_tree is not None:
        return data.truth_tree, extra
    cols = data.truth if data.truth is not None else data.original
    if cols is None:
        cols = np.arange(d.p)
    sol = ExactFinal(min(_sr_k(cfg), len(cols)), cfg.gamma, cfg.time_limit)(d.subset(cols=cols))
    return expand_solution(sol, cols, d.p), extra


def evaluate(model, data: SeedData, oracle_tree: bool = False) -> List[Tuple[str, float]]:
    """Prediction and structure metrics applicable to the model and task."""
    test = data.test
    out: List[Tuple[str, float]] = []
    if isinstance(model, RegressorSolution):
        if test.task is Task.REGRESSION:
            out.append(("r2", r2(test.y, model.predict(test.X))))
        else:
            out.append(("auc", auc(test.y, model.predict(test.X))))
            out.append(("accuracy", float(np.mean(model.predict_labels(test.X) == test.y))))
        truth = data.truth
        if truth is not None:
            sm = support_metrics(model.support, truth)
            out += [("sr_acc", sm.sr_acc), ("sr_fa", sm.sr_fa)]
        elif data.original is not None:
            out.append(("original_fraction", float(np.isin(model.support, data.original).mean())
                        if model.support.size else 1.0))
        out.append(("selected_size", model.support.size))
        out.append(("gap", model.gap))
        return out
    X = data.raw_test_X if oracle_tree else test.X
    if len(model.classes) == 2 and test.task is Task.BINARY:
        out.append(("auc", auc(test.y, positive_scores(model, X))))
    out.append(("accuracy", float(np.mean(model.predict(X) == test.y))))
    if data.truth is not None:
        frac, depth = tree_structure_metrics(model, data.truth)
        out.append(("fraction_relevant", frac))
        out.append(("depth", depth))
    out.append(("n_features_used", len({b.feature for b in model.branches()})))
    return out


def run_seed(cfg: ExperimentConfig, seed: int) -> SeedOutcome:
    """One seed end to end; library errors become an error record."""
    out = SeedOutcome(seed)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            t0 = time.perf_counter()
            data = make_data(cfg, seed)
            t1 = time.perf_counter()
            model, extra = run_method(cfg, data, seed)
            t2 = time.perf_counter()
            oracle_tree = cfg.method is Method.ORACLE and data.truth_tree is not None
            metrics = evaluate(model, data, oracle_tree) + extra
            t3 = time.perf_counter()
    except (BackboneError, ValueError, ArithmeticError, IndexError, MemoryError) as exc:
        out.error = type(exc).__name__
        return out
    out.metrics = [(name, float(v)) for name, v in metrics]
    out.timings = {"data": t1 - t0, "fit": t2 - t1, "metrics": t3 - t2}
    return out


def _job(args):
    return run_seed(*args)


def worker_count(cfg: ExperimentConfig) -> int:
    if cfg.workers is not None:
        return cfg.workers
    env = os.environ.get("BACKBONE_WORKERS", "").strip()
    return max(1, int(env)) if env.isdigit() else 1


def run_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> ExperimentResult:
    """Run every seed, in worker processes when more than one worker is requested."""
    cfg.validate()
    n_workers = workers if workers is not None else worker_count(cfg)
    jobs = [(cfg, s) for s in cfg.seeds]
    if n_workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(n_workers, len(jobs))) as ex:
            outcomes = list(ex.map(_job, jobs))
    else:
        outcomes = [_job(j) for j in jobs]
    outcomes.sort(key=lambda o: o.seed)
    return ExperimentResult(cfg, outcomes)


def write_results(result: ExperimentResult, path: Union[str, Path]):
    """Long-form results CSV plus a ``.timings.csv`` sidecar next to it."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        w.writerows(result.rows())
    with open(timings_path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("seed", "phase", "seconds"))
        for o in result.outcomes:
            for phase, sec in o.timings.items():
                w.writerow((o.seed, phase, "%.6f" % sec))


def timings_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".timings.csv")


def read_results(path: Union[str, Path]) -> List[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def exit_code(result: ExperimentResult) -> int:
    return 2 if result.failed else 0

