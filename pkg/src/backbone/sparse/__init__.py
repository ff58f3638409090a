"""Sparse linear and logistic regression solvers."""

from .brute_force import brute_force_best_subset
from .cutting_planes import CuttingPlaneConfig, fit_exact_cutting_planes
from .elastic_net import ElasticNetConfig, fit_elastic_net, lambda_max
from .objective import InnerProblem, RegressorSolution, objective, read_solution, write_solution
from .relaxation import SubgradientConfig, fit_relaxation_subgradient, project_capped_simplex, randomized_rounding
from .tuning import Solver, cv_incremental_k, elastic_net_cv, gamma_grid
