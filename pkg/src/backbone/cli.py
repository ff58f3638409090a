"""Command-line entry point.

Subcommands drive each phase on its own (``gen``, ``screen``, ``backbone``,
``sr``, ``tree``, ``advise``) or a whole experiment (``experiment``).
Exit codes: 0 on success, 2 when some experiment seeds failed, 1 on
configuration or input errors.
"""

from __future__ import annotations

import argparse
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .config import add_config_flags, flag_overrides, parse_config
from .core import BackboneConfig, recommend_hyperparameters, write_provenance
from .data import Dataset, load_csv, standardize, write_csv
from .errors import BackboneError, BackboneWarning
from .harness import exit_code, run_experiment, write_results
from .pipelines import regression_backbone, tree_backbone
from .screening import screen, write_utilities
from .sparse.cutting_planes import CuttingPlaneConfig, fit_exact_cutting_planes
from .sparse.objective import write_solution
from .synth import TreeGenConfig, gen_linear, gen_logistic, gen_tree_data, write_linear_truth, write_tree_truth
from .trees.cart import TreeParams, fit_cart
from .trees.local_search import fit_oct_local_search
from .trees.model import dumps


def _add_data_args(p: argparse.ArgumentParser):
    p.add_argument("data", help="numeric CSV file")
    p.add_argument("--response-column", default="-1", help="index or header name of the response")
    p.add_argument("--no-header", action="store_true", help="the file has no header line")
    p.add_argument("--task", choices=["regression", "binary", "multiclass"],
                   help="default: inferred from the labels for tree models, regression otherwise")
    p.add_argument("--no-standardize", action="store_true")


def _load(args) -> Dataset:
    col = args.response_column
    col = int(col) if col.lstrip("-").isdigit() else col
    task = args.task
    if task is None:
        task = "regression"
        if args.command == "tree" or getattr(args, "model", None) == "tree":
            y = load_csv(args.data, col, header=not args.no_header).y
            task = "binary" if set(np.unique(y)) <= {-1.0, 1.0} else "multiclass"
    d = load_csv(args.data, col, task, header=not args.no_header)
    return d if args.no_standardize else standardize(d)[0]


def cmd_gen(args):
    if args.kind == "tree":
        d, truth = gen_tree_data(args.n, args.p, TreeGenConfig(args.depth, args.k, args.r, args.f), args.rho, args.seed)
        write_csv(d, args.out)
        if args.truth:
            write_tree_truth(truth, args.truth)
    else:
        gen = gen_linear if args.kind == "linear" else gen_logistic
        d, truth = gen(args.n, args.p, args.k, args.rho, args.snr, args.seed)
        write_csv(d, args.out)
        if args.truth:
            write_linear_truth(truth, args.truth)
    print(f"wrote {d.n} x {d.p} to {args.out}")
    return 0


def cmd_screen(args):
    d = _load(args)
    kept, mu = screen(d, args.alpha)
    if args.out:
        write_utilities(mu, args.out)
    print(f"kept {kept.size} of {d.p} features")
    print(" ".join(str(int(j)) for j in kept))
    return 0


def _backbone_config(args, k_max) -> BackboneConfig:
    return BackboneConfig(M=args.M, alpha=args.alpha, beta=args.beta, B_max=args.B_max, k_max=k_max,
                          sampling_mode=args.sampling_mode, seed=args.seed, early_stop=args.early_stop)


def cmd_backbone(args):
    d = _load(args)
    if args.model == "tree":
        sub = TreeParams(args.sub_depth or args.depth, args.min_bucket, args.complexity)
        final = TreeParams(args.depth, args.min_bucket, args.complexity)
        res = tree_backbone(d, _backbone_config(args, 2**sub.max_depth - 1), sub, final, args.restarts, args.seed)
        if args.out:
            Path(args.out).write_text(dumps(res.final_model))
    else:
        res = regression_backbone(d, _backbone_config(args, args.k_max), args.k, args.subproblem_solver,
                                  args.gamma, args.time_limit)
        if args.out:
            write_solution(res.final_model, args.out, k=args.k, wall_time=sum(res.timings.values()))
    if args.provenance:
        write_provenance(res, args.provenance)
    print(f"backbone ({res.backbone.size} features, {res.iterations_used} iterations, "
          f"{res.termination_reason}): " + " ".join(str(int(j)) for j in res.backbone))
    return 0


def cmd_sr(args):
    d = _load(args)
    gamma = args.gamma if args.gamma is not None else 1.0 / np.sqrt(d.n)
    t0 = time.perf_counter()
    sol = fit_exact_cutting_planes(d, CuttingPlaneConfig(k=args.k, gamma=gamma, time_limit=args.time_limit))
    wall = time.perf_counter() - t0
    if args.out:
        write_solution(sol, args.out, k=args.k, wall_time=wall)
    print(f"status={sol.status} objective={sol.objective:.10g} gap={sol.gap:.3g} support="
          + " ".join(str(int(j)) for j in sol.support))
    return 0


def cmd_tree(args):
    d = _load(args)
    params = TreeParams(args.depth, args.min_bucket, args.complexity)
    if args.method == "cart":
        tree = fit_cart(d, params)
    else:
        tree = fit_oct_local_search(d, params, restarts=args.restarts, seed=args.seed)
    text = dumps(tree)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_experiment(args):
    cfg = parse_config(args.config, flag_overrides(args))
    result = run_experiment(cfg)
    write_results(result, cfg.output)
    if result.failed:
        print("failed seeds: " + " ".join(map(str, result.failed)), file=sys.stderr)
    print(f"wrote {cfg.output}")
    return exit_code(result)


def cmd_advise(args):
    a = recommend_hyperparameters(args.n, args.p, args.k, args.beta, args.p_sub, args.phi, args.variant,
                                  args.sigma2, args.theta)
    print(f"alpha = {a.alpha:.6g}")
    print(f"M = {a.M}")
    print(f"sample_bound = {a.sample_bound:.6g} ({'satisfied' if a.sample_ok else 'not satisfied'} by n = {args.n})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="backbone", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"backbone {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    p.add_argument("kind", choices=["linear", "logistic", "tree"])
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--p", type=int, default=2000)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--snr", type=float, default=6.0)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--f", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--truth", help="where to write the ground truth")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("screen", help="marginal-utility screening")
    _add_data_args(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--out", help="write per-feature utilities here")
    p.set_defaults(func=cmd_screen)

    p = sub.add_parser("backbone", help="build a backbone and fit the reduced problem")
    _add_data_args(p)
    p.add_argument("--model", choices=["regression", "tree"], default="regression")
    p.add_argument("--k", type=int, default=10, help="support size of the final regression")
    p.add_argument("--M", type=int, default=10)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--B_max", type=int, default=50)
    p.add_argument("--k_max", type=int, default=10)
    p.add_argument("--sampling-mode", default="screening_sample", choices=["screening_sample", "random_sample"])
    p.add_argument("--early-stop", action="store_true")
    p.add_argument("--subproblem-solver", default="subgradient", choices=["subgradient", "elastic_net"])
    p.add_argument("--gamma", type=float)
    p.add_argument("--time-limit", type=float, default=60.0)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--sub-depth", type=int)
    p.add_argument("--min-bucket", type=int, default=1)
    p.add_argument("--complexity", type=float, default=0.0)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--provenance", help="write per-subproblem sampled/selected features here")
    p.add_argument("--out", help="write the final model here")
    p.set_defaults(func=cmd_backbone)

    p = sub.add_parser("sr", help="exact sparse regression by cutting planes")
    _add_data_args(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--gamma", type=float)
    p.add_argument("--time-limit", type=float, default=60.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sr)

    p = sub.add_parser("tree", help="fit a classification tree")
    _add_data_args(p)
    p.set_defaults(task="binary")
    p.add_argument("--method", choices=["cart", "oct_local_search"], default="cart")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--min-bucket", type=int, default=1)
    p.add_argument("--complexity", type=float, default=0.0)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_tree)

    p = sub.add_parser("experiment", help="run a configured experiment over several seeds")
    p.add_argument("config", nargs="?", help="key = value configuration file")
    add_config_flags(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("advise", help="recommend alpha and M")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--p-sub", type=float, default=0.1, help="estimated subproblem failure probability")
    p.add_argument("--phi", type=float, default=0.5)
    p.add_argument("--variant", choices=["theorem", "experimental"], default="theorem")
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--theta", type=float, help="confidence exponent; default log(alpha p)")
    p.set_defaults(func=cmd_advise)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BackboneWarning)
            return args.func(args)
    except (BackboneError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
