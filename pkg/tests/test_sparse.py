import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from backbone.data import Dataset, Task, standardize
from backbone.errors import InvalidGrid, TooLarge
from backbone.screening import Loss
from backbone.sparse import (
    CuttingPlaneConfig,
    ElasticNetConfig,
    SubgradientConfig,
    brute_force_best_subset,
    cv_incremental_k,
    elastic_net_cv,
    fit_elastic_net,
    fit_exact_cutting_planes,
    fit_relaxation_subgradient,
    gamma_grid,
    lambda_max,
    objective,
    project_capped_simplex,
    randomized_rounding,
    read_solution,
    write_solution,
)
from backbone.synth import gen_linear, gen_logistic

from oracles import (
    best_subset_enumeration,
    capped_simplex_kkt_oracle,
    enet_kkt_residual,
    ridge_subset_objective,
)


def linear(n, p, k, snr, seed, rho=0.0):
    d, t = gen_linear(n, p, k, rho, snr, seed=seed)
    return standardize(d)[0], t


# elastic net ---------------------------------------------------------------


@pytest.mark.parametrize("mu", [1.0, 0.5])
def test_enet_lambda_max_kills_everything(mu):
    d, _ = linear(40, 10, 3, 2.0, 0)
    lam = lambda_max(d.X, d.y, mu)
    assert fit_elastic_net(d, ElasticNetConfig(lam, mu)).support.size == 0
    assert fit_elastic_net(d, ElasticNetConfig(0.9 * lam, mu)).support.size > 0


def test_enet_orthonormal_closed_form():
    n = 64
    rng = np.random.default_rng(0)
    # orthogonal and centered columns with X'X = n I
    H = np.linalg.qr(np.column_stack([np.ones(n), rng.normal(size=(n, 4))]))[0][:, 1:]
    X = H * math.sqrt(n)
    y = X @ np.array([1.0, -0.4, 0.05, 0.0]) + rng.normal(scale=0.3, size=n)
    lam = 0.2
    sol = fit_elastic_net(Dataset(X, y), ElasticNetConfig(lam, 1.0))
    v = X.T @ (y - y.mean()) / n
    expected = np.sign(v) * np.maximum(np.abs(v) - lam, 0.0)
    np.testing.assert_allclose(sol.w, expected, atol=1e-8)


@pytest.mark.parametrize("seed", range(3))
@pytest.mark.parametrize("mu", [1.0, 0.5, 0.1])
def test_enet_kkt_squared(seed, mu):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(30, 8))
    y = X[:, :3] @ np.array([1.0, -2.0, 0.5]) + rng.normal(size=30)
    d = Dataset(X, y)
    lam = 0.1 * lambda_max(X, y, mu)
    sol = fit_elastic_net(d, ElasticNetConfig(lam, mu, coef_threshold=0.0))
    assert enet_kkt_residual(X, y, sol.w, sol.intercept, lam, mu) <= 1e-6


@pytest.mark.parametrize("seed", range(3))
def test_enet_kkt_logistic(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(60, 8))
    y = np.where(X[:, 0] - X[:, 1] + rng.normal(size=60) > 0, 1.0, -1.0)
    d = Dataset(X, y, Task.BINARY)
    lam = 0.2 * lambda_max(X, y, 0.7, Loss.LOGISTIC)
    sol = fit_elastic_net(d, ElasticNetConfig(lam, 0.7, coef_threshold=0.0))
    assert enet_kkt_residual(X, y, sol.w, sol.intercept, lam, 0.7, logistic=True) <= 1e-6


def test_enet_reported_objective_matches_shared_evaluator():
    d, _ = linear(50, 10, 3, 3.0, 1)
    sol = fit_elastic_net(d, ElasticNetConfig(0.05, 0.5))
    assert sol.objective == pytest.approx(objective(d.X, d.y, sol.w, sol.intercept, sol.gamma, Loss.SQUARED), rel=1e-10)


def test_enet_cv_noise_is_near_empty():
    # Monte Carlo estimate of the expected number of spurious features
    sizes = []
    for seed in range(10):
        rng = np.random.default_rng(seed)
        d = Dataset(rng.normal(size=(200, 50)), rng.normal(size=200))
        d, _ = standardize(d)
        _, sol = elastic_net_cv(d, [1.0], k_max=10, seed=seed)
        sizes.append(sol.support.size)
    assert np.mean(sizes) <= 2


def test_enet_cv_grid_size_and_membership():
    d, _ = linear(80, 30, 4, 3.0, 2)
    mus = [0.0, 0.25, 0.5, 0.75, 1.0]
    cfg, sol = elastic_net_cv(d, mus, k_max=8, grid_len=6)
    scores = sol.info["cv_scores"]
    assert len(scores) == 5 * 6
    assert (cfg.mu, cfg.lam) in {(m, l) for m, l, _ in scores}
    assert cfg.mu in mus
    with pytest.raises(InvalidGrid):
        elastic_net_cv(d, [], k_max=3)


# capped simplex projection --------------------------------------------------


def test_projection_worked_example():
    v = np.array([0.5, 0.9, 1.4, -0.2])
    z = project_capped_simplex(v, 2)
    assert np.all((z >= 0) & (z <= 1)) and z.sum() <= 2 + 1e-12
    np.testing.assert_allclose(z, capped_simplex_kkt_oracle(v, 2), atol=1e-9)


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32), st.floats(0.5, 8.0))
def test_projection_matches_kkt_oracle(p, seed, k):
    v = np.random.default_rng(seed).normal(scale=1.5, size=p) + 0.3
    k = min(k, p)
    z = project_capped_simplex(v, k)
    assert np.all((z >= 0) & (z <= 1)) and z.sum() <= k + 1e-12
    np.testing.assert_allclose(z, capped_simplex_kkt_oracle(v, k), atol=1e-9)


# subgradient relaxation -----------------------------------------------------


def test_subgradient_full_support_is_ridge():
    d, _ = linear(40, 5, 2, 2.0, 3)
    gamma = 0.3
    sol = fit_relaxation_subgradient(d, SubgradientConfig(k=5, gamma=gamma))
    obj, w = ridge_subset_objective(d.X, d.y, range(5), gamma)
    np.testing.assert_allclose(sol.w, w, atol=1e-10)
    assert sol.objective == pytest.approx(obj, rel=1e-10)


def test_subgradient_matches_enumeration():
    hits = 0
    for seed in range(10):
        d, _ = linear(60, 12, 3, 1e8, seed)
        gamma = 1 / math.sqrt(60)
        sol = fit_relaxation_subgradient(d, SubgradientConfig(k=3, gamma=gamma))
        _, S = best_subset_enumeration(d.X, d.y, 3, gamma)
        hits += tuple(sol.support.tolist()) == S
    assert hits >= 9


# randomized rounding --------------------------------------------------------


def test_rounding_examples():
    z = np.array([1.0, 0.0, 1.0, 0.0, 1.0])
    for rounds in (1, 7):
        np.testing.assert_array_equal(randomized_rounding(z, rounds, 5, seed=rounds), [0, 2, 4])
    assert randomized_rounding(np.zeros(6), 50, 3).size == 0
    np.testing.assert_array_equal(randomized_rounding(np.full(10, 0.5), 200, 10, seed=4), np.arange(10))
    with pytest.raises(ValueError):
        randomized_rounding(np.array([0.2, 1.2]), 1, 1)


def test_rounding_truncates_by_scores():
    z = np.ones(6)
    scores = np.array([0.1, 5.0, -3.0, 0.2, 4.0, 0.0])
    np.testing.assert_array_equal(randomized_rounding(z, 3, 2, scores=scores), [1, 4])


# exact cutting planes -------------------------------------------------------


def test_cutting_planes_full_support_root():
    d, _ = linear(30, 4, 2, 2.0, 5)
    sol = fit_exact_cutting_planes(d, CuttingPlaneConfig(k=4, gamma=0.5))
    assert sol.status == "optimal" and sol.gap == 0.0
    assert sol.objective == pytest.approx(ridge_subset_objective(d.X, d.y, range(4), 0.5)[0], rel=1e-10)


def _cp_vs_enumeration(seed):
    rng = np.random.default_rng(seed)
    snr = float(rng.choice([0.5, 2.0, 10.0]))
    d, _ = linear(50, 15, 3, snr, seed, rho=float(rng.choice([0.0, 0.5])))
    gamma = 1 / math.sqrt(50)
    sol = fit_exact_cutting_planes(d, CuttingPlaneConfig(k=3, gamma=gamma))
    obj, S = best_subset_enumeration(d.X, d.y, 3, gamma)
    return sol, obj, S


@pytest.mark.parametrize("seed", range(50))
def test_cutting_planes_matches_enumeration(seed):
    sol, obj, S = _cp_vs_enumeration(seed)
    assert tuple(sol.support.tolist()) == S
    assert abs(sol.objective - obj) <= 1e-8 * abs(obj)
    assert sol.gap <= 1e-6


def test_cutting_planes_orthogonal_noiseless():
    n = 40
    rng = np.random.default_rng(1)
    H = np.linalg.qr(np.column_stack([np.ones(n), rng.normal(size=(n, 8))]))[0][:, 1:] * math.sqrt(n)
    w = np.zeros(8)
    w[[1, 4, 6]] = [1.0, -1.0, 1.0]
    sol = fit_exact_cutting_planes(Dataset(H, H @ w), CuttingPlaneConfig(k=3, gamma=1.0))
    np.testing.assert_array_equal(sol.support, [1, 4, 6])
    assert sol.gap <= 1e-6


@pytest.mark.parametrize("seed", range(4))
def test_cutting_planes_logistic_matches_brute_force(seed):
    d, _ = gen_logistic(60, 8, 2, 0.0, 4.0, seed=seed)
    d, _ = standardize(d)
    gamma = 1 / math.sqrt(60)
    sol = fit_exact_cutting_planes(d, CuttingPlaneConfig(k=2, gamma=gamma))
    ref = brute_force_best_subset(d, 2, gamma)
    np.testing.assert_array_equal(sol.support, ref.support)
    assert sol.objective == pytest.approx(ref.objective, rel=1e-8)


@pytest.mark.parametrize("node_limit", [1, 3, 10])
def test_gap_soundness(node_limit):
    for seed in range(5):
        d, _ = linear(50, 15, 4, 0.5, 100 + seed, rho=0.7)
        gamma = 1 / math.sqrt(50)
        sol = fit_exact_cutting_planes(d, CuttingPlaneConfig(k=4, gamma=gamma, node_limit=node_limit),
                                       use_subgradient_warm_start=False)
        obj, _ = best_subset_enumeration(d.X, d.y, 4, gamma)
        assert sol.lower_bound <= obj * (1 + 1e-9) and obj <= sol.objective * (1 + 1e-12)
        assert sol.gap >= 0
        assert sol.gap == pytest.approx((sol.objective - sol.lower_bound) / max(abs(sol.objective), 1e-12), abs=1e-12)


def test_warm_start_dominance():
    for seed in range(5):
        d, _ = linear(50, 20, 4, 1.0, 200 + seed, rho=0.5)
        gamma = 0.2
        warm = np.array([0, 5, 9, 13])
        sol = fit_exact_cutting_planes(d, CuttingPlaneConfig(k=4, gamma=gamma, node_limit=1), warm_start=warm)
        assert sol.objective <= ridge_subset_objective(d.X, d.y, warm, gamma)[0] * (1 + 1e-12)


# brute force ----------------------------------------------------------------


def test_brute_force_single_feature_is_ridge():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(20, 1))
    d = Dataset(X, 2 * X[:, 0] + rng.normal(size=20))
    sol = brute_force_best_subset(d, 1, 0.7)
    obj, w = ridge_subset_objective(d.X, d.y, [0], 0.7)
    np.testing.assert_allclose(sol.w, w, rtol=1e-10)
    assert sol.objective == pytest.approx(obj, rel=1e-10)


def test_brute_force_matches_numpy_enumeration_and_is_monotone():
    d, _ = linear(40, 9, 3, 1.5, 7, rho=0.4)
    prev = math.inf
    for k in range(0, 6):
        sol = brute_force_best_subset(d, k, 0.3)
        obj, S = best_subset_enumeration(d.X, d.y, k, 0.3)
        assert tuple(sol.support.tolist()) == S
        assert sol.objective == pytest.approx(obj, rel=1e-10)
        assert sol.objective <= prev
        prev = sol.objective
        assert sol.objective == pytest.approx(objective(d.X, d.y, sol.w, sol.intercept, 0.3, Loss.SQUARED), rel=1e-10)


def test_brute_force_guard():
    d = Dataset(np.random.default_rng(0).normal(size=(5, 40)), np.zeros(5))
    with pytest.raises(TooLarge):
        brute_force_best_subset(d, 10, 1.0)


# tuning ---------------------------------------------------------------------


@pytest.mark.slow
def test_incremental_k_planted():
    hits = 0
    for seed in range(10):
        d, _ = linear(200, 60, 10, 1e8, seed)
        k_star, _ = cv_incremental_k(d, 5, 5, k_max=40, seed=seed)
        hits += k_star in (10, 15)
    assert hits >= 8


def test_incremental_k_noise_stops_at_k0():
    hits = 0
    for seed in range(10):
        rng = np.random.default_rng(seed)
        d, _ = standardize(Dataset(rng.normal(size=(200, 50)), rng.normal(size=200)))
        k_star, _ = cv_incremental_k(d, 5, 5, seed=seed)
        hits += k_star == 5
    assert hits >= 8


def test_incremental_k_degenerate_grid():
    d, _ = linear(20, 30, 2, 2.0, 0)
    with pytest.raises(InvalidGrid):
        cv_incremental_k(d, 20, 5)
    with pytest.raises(InvalidGrid):
        cv_incremental_k(d, 2, 0)


def test_gamma_grid():
    d, _ = linear(50, 20, 3, 2.0, 0)
    g = gamma_grid(d, 3, 2)
    row_sq = np.max((d.X**2).sum(axis=1))
    np.testing.assert_allclose(g, [20 / (3 * 50 * row_sq), 1 / math.sqrt(50)])
    g = gamma_grid(d, 3, 6)
    assert np.all(np.diff(g) > 0) and g.size == 6
    with pytest.raises(InvalidGrid):
        gamma_grid(d, 3, 1)


def test_gamma_grid_formula_example():
    n, p = 100, 1000
    X = np.ones((n, p))  # every row has squared norm p
    g = gamma_grid(Dataset(X, np.zeros(n)), 10, 2)
    assert g[0] == pytest.approx(1e-3, rel=1e-12)


def test_solution_csv_round_trip(tmp_path):
    d, _ = linear(40, 12, 3, 2.0, 1)
    sol = brute_force_best_subset(d, 3, 0.4)
    write_solution(sol, tmp_path / "s.csv", wall_time=0.5)
    back = read_solution(tmp_path / "s.csv", d.p)
    np.testing.assert_array_equal(back.w, sol.w)
    assert back.objective == sol.objective and back.intercept == sol.intercept and back.gamma == sol.gamma
