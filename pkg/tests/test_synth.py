import numpy as np
import pytest

from backbone.errors import InfeasibleConfig
from backbone.synth import (
    TreeGenConfig,
    gen_design,
    gen_linear,
    gen_logistic,
    gen_tree_data,
    read_linear_support,
    sample_from_tree,
    write_linear_truth,
)
from backbone.trees.model import Branch, Leaf, loads, predict


def test_design_determinism():
    a = gen_design(50, 7, 0.5, seed=11)
    b = gen_design(50, 7, 0.5, seed=11)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, gen_design(50, 7, 0.5, seed=12))


@pytest.mark.parametrize("rho", [0.0, 0.6, 0.9])
def test_design_covariance(rho):
    X = gen_design(100_000, 4, rho, seed=1)
    C = np.corrcoef(X, rowvar=False)
    for lag in (1, 2):
        assert abs(C[0, lag] - rho**lag) <= 0.02
    np.testing.assert_allclose(X.var(0), 1.0, atol=0.02)


def test_linear_snr_exact_and_truth():
    d, t = gen_linear(300, 40, 6, 0.3, 2.5, seed=3)
    signal = d.X @ t.w_true
    eps = d.y - signal
    assert abs(np.linalg.norm(signal) / np.linalg.norm(eps) - np.sqrt(2.5)) <= 1e-12
    assert t.k == 6 and np.all(np.diff(t.support) > 0)
    assert set(np.unique(t.w_true[t.support])) <= {-1.0, 1.0}
    assert np.count_nonzero(t.w_true) == 6


def test_linear_high_snr_ols_recovers_signs():
    d, t = gen_linear(500, 30, 5, 0.0, 1e8, seed=4)
    w, *_ = np.linalg.lstsq(d.X[:, t.support], d.y, rcond=None)
    np.testing.assert_allclose(w, t.w_true[t.support], atol=1e-3)


def test_linear_full_support():
    _, t = gen_linear(20, 5, 5, 0.0, 1.0, seed=0)
    assert np.all(t.w_true != 0)


def test_logistic_noiseless_labels_and_balance():
    d, t = gen_logistic(200, 20, 4, 0.2, 1e8, seed=5)
    s = d.X @ t.w_true
    np.testing.assert_array_equal(d.y, np.where(s >= 0, 1.0, -1.0))
    big, _ = gen_logistic(10_000, 10, 3, 0.0, 2.0, seed=6)
    assert abs(big.y.mean()) <= 0.1
    again, _ = gen_logistic(200, 20, 4, 0.2, 1e8, seed=5)
    assert np.array_equal(again.y, d.y) and np.array_equal(again.X, d.X)


def test_truth_sidecar_round_trip(tmp_path):
    _, t = gen_linear(30, 12, 3, 0.0, 1.0, seed=2)
    write_linear_truth(t, tmp_path / "t.csv")
    np.testing.assert_array_equal(read_linear_support(tmp_path / "t.csv"), t.support)


def _walk(node, bounds, out):
    """Collect (leaf pair siblings, path-interval emptiness) along every path."""
    if isinstance(node, Leaf):
        return
    lo, hi = bounds.get(node.feature, (-np.inf, np.inf))
    out["intervals"].append(lo < node.threshold < hi)
    if isinstance(node.left, Leaf) and isinstance(node.right, Leaf):
        out["siblings"].append(node.left.label != node.right.label)
    _walk(node.left, {**bounds, node.feature: (lo, node.threshold)}, out)
    _walk(node.right, {**bounds, node.feature: (node.threshold, hi)}, out)


@pytest.mark.parametrize("depth,k,r,seed", [(1, 1, 1, 0), (3, 7, 1, 1), (3, 3, 2, 2), (5, 31, 1, 3), (4, 5, 3, 4)])
def test_tree_generator_invariants(depth, k, r, seed):
    d, truth = gen_tree_data(600, 40, TreeGenConfig(depth, k, r), rho=0.5, seed=seed)
    tree = truth.tree
    assert tree.depth == depth and tree.n_branches == 2**depth - 1
    assert len(truth.relevant) == k
    used = [b.feature for b in tree.branches()]
    for j in truth.relevant:
        assert used.count(j) >= r
    assert set(used) == set(truth.relevant.tolist())
    info = {"intervals": [], "siblings": []}
    _walk(tree.root, {}, info)
    assert all(info["intervals"]) and all(info["siblings"])
    np.testing.assert_array_equal(d.y, predict(tree, d.X))


def test_tree_single_split_labels():
    d, truth = gen_tree_data(100, 5, TreeGenConfig(1, 1, 1), rho=0.0, seed=9)
    root = truth.tree.root
    assert isinstance(root, Branch)
    left = d.X[:, root.feature] < root.threshold
    assert np.all(d.y[left] == root.left.label) and np.all(d.y[~left] == root.right.label)


def test_tree_config_infeasible():
    with pytest.raises(InfeasibleConfig):
        TreeGenConfig(2, 3, 2)
    with pytest.raises(InfeasibleConfig):
        gen_tree_data(10, 2, TreeGenConfig(2, 3, 1), rho=0.0)


def test_sample_from_tree_and_text_round_trip():
    from backbone.trees.model import dumps

    _, truth = gen_tree_data(200, 10, TreeGenConfig(2, 3, 1), rho=0.3, seed=1)
    fresh = sample_from_tree(truth, 300, 10, 0.3, seed=2)
    np.testing.assert_array_equal(fresh.y, predict(truth.tree, fresh.X))
    back = loads(dumps(truth.tree))
    np.testing.assert_array_equal(predict(back, fresh.X), fresh.y)
