import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from backbone.data import (
    Dataset,
    Task,
    ceil_fraction,
    holdout_split,
    load_csv,
    permute_expand,
    standardize,
    write_csv,
)
from backbone.errors import MissingValue, ParseError, ZeroVarianceColumn


def test_dataset_rejects_bad_shapes_and_labels():
    with pytest.raises(ValueError):
        Dataset(np.zeros((3, 2)), np.zeros(4))
    with pytest.raises(ValueError):
        Dataset(np.zeros((3, 2)), np.array([1.0, 0.0, -1.0]), Task.BINARY)


def test_standardize_hand_example():
    d = Dataset(np.array([[1.0], [3.0]]), np.array([0.0, 1.0]))
    s, stats = standardize(d)
    np.testing.assert_array_equal(s.X[:, 0], [-1.0, 1.0])
    assert stats.means[0] == 2.0 and stats.scales[0] == 1.0
    np.testing.assert_allclose(s.y, [-0.5, 0.5])


def test_standardize_is_idempotent_on_standardized_input():
    X = np.array([[-1.0, 2.0], [0.0, -1.0], [1.0, 5.0]])
    X = (X - X.mean(0)) / X.std(0)
    s, stats = standardize(Dataset(X, np.arange(3.0)))
    np.testing.assert_allclose(s.X, X, atol=1e-15)
    np.testing.assert_allclose(stats.means, 0.0, atol=1e-15)
    np.testing.assert_allclose(stats.scales, 1.0)


def test_standardize_constant_column():
    X = np.column_stack([np.arange(4.0), np.full(4, 5.0)])
    with pytest.raises(ZeroVarianceColumn) as err:
        standardize(Dataset(X, np.arange(4.0)))
    assert err.value.column == 1


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 30), st.integers(1, 6), st.integers(0, 10**6))
def test_standardize_moments_and_inversion(n, p, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(3.0, 2.0, (n, p))
    y = rng.normal(size=n)
    d = Dataset(X, y)
    s, stats = standardize(d)
    np.testing.assert_allclose(s.X.mean(0), 0.0, atol=1e-10)
    np.testing.assert_allclose(s.X.var(0), 1.0, atol=1e-10)
    np.testing.assert_allclose(stats.transform(X), s.X)
    np.testing.assert_allclose(stats.inverse_response(s.y), y)
    w = rng.normal(size=p)
    w_raw, b_raw = stats.unscale_coefficients(w, 0.3)
    np.testing.assert_allclose(X @ w_raw + b_raw, stats.inverse_response(s.X @ w + 0.3), atol=1e-9)


def test_classification_response_not_centered():
    d = Dataset(np.arange(6.0).reshape(3, 2) ** 2, np.array([1.0, 1.0, -1.0]), Task.BINARY)
    s, _ = standardize(d)
    np.testing.assert_array_equal(s.y, d.y)


def test_load_csv_basic(tmp_path):
    f = tmp_path / "a.csv"
    f.write_text("1,2,3\n4,5,6\n7,8,9\n")
    d = load_csv(f)
    assert (d.n, d.p) == (3, 2)
    np.testing.assert_array_equal(d.y, [3, 6, 9])
    d0 = load_csv(f, response_column=0)
    np.testing.assert_array_equal(d0.X[:, 0], [2, 5, 8])


def test_load_csv_named_response(tmp_path):
    f = tmp_path / "a.csv"
    f.write_text("a,target,b\n1,2,3\n4,5,6\n")
    d = load_csv(f, response_column="target", header=True)
    np.testing.assert_array_equal(d.y, [2, 5])
    assert d.feature_names == ("a", "b")


def test_load_csv_parse_error_position(tmp_path):
    f = tmp_path / "a.csv"
    f.write_text("1,2\n3,oops\n")
    with pytest.raises(ParseError) as err:
        load_csv(f)
    assert (err.value.row, err.value.column) == (2, 2)


def test_load_csv_missing_value(tmp_path):
    f = tmp_path / "a.csv"
    f.write_text("1,2\n,4\n")
    with pytest.raises(MissingValue) as err:
        load_csv(f)
    assert (err.value.row, err.value.column) == (2, 1)


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    d = Dataset(rng.normal(size=(7, 4)) * 1e3, rng.normal(size=7))
    write_csv(d, tmp_path / "r.csv")
    back = load_csv(tmp_path / "r.csv", header=True)
    np.testing.assert_allclose(back.X, d.X, rtol=1e-12, atol=0)
    np.testing.assert_allclose(back.y, d.y, rtol=1e-12, atol=0)


def test_holdout_split_sizes_and_determinism():
    sp = holdout_split(10, 0.7, seed=5)
    assert len(sp.train) == 7 and len(sp.validation) == 3
    again = holdout_split(10, 0.7, seed=5)
    np.testing.assert_array_equal(sp.train, again.train)
    np.testing.assert_array_equal(np.sort(np.concatenate([sp.train, sp.validation])), np.arange(10))


def test_holdout_split_uniform_frequency():
    n = 20
    counts = np.zeros(n)
    for seed in range(10_000):
        counts[holdout_split(n, 0.7, seed).train] += 1
    freq = counts / 10_000
    assert np.all(np.abs(freq - 0.7) <= 0.02)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 200), st.floats(0.05, 0.95), st.integers(0, 2**32))
def test_holdout_split_partition(n, ratio, seed):
    sp = holdout_split(n, ratio, seed)
    assert not set(sp.train) & set(sp.validation)
    assert sorted(np.concatenate([sp.train, sp.validation])) == list(range(n))
    assert abs(len(sp.train) - ratio * n) <= 1


def test_permute_expand_identity_and_shapes():
    rng = np.random.default_rng(0)
    d = Dataset(rng.normal(size=(6, 2)), rng.normal(size=6))
    same, mask = permute_expand(d, 0)
    np.testing.assert_array_equal(same.X, d.X)
    assert mask.all()
    big, mask = permute_expand(d, 3, seed=1)
    assert big.p == 8 and mask.sum() == 2 and mask[:2].all()


def test_permute_expand_preserves_multisets_and_breaks_alignment():
    rng = np.random.default_rng(2)
    n, p, copies = 2000, 3, 20
    X = rng.normal(size=(n, p))
    y = X[:, 0] + X[:, 1] - X[:, 2]
    big, _ = permute_expand(Dataset(X, y), copies, seed=4)
    cors = []
    for c in range(1, copies + 1):
        for j in range(p):
            col = big.X[:, c * p + j]
            np.testing.assert_array_equal(np.sort(col), np.sort(X[:, j]))
            cors.append(abs(np.corrcoef(col, y)[0, 1]))
    assert np.mean(cors) < 3 / np.sqrt(n)


def test_ceil_fraction_is_robust_to_rounding():
    assert ceil_fraction(0.1, 30) == 3
    assert ceil_fraction(0.25, 2000) == 500
    assert ceil_fraction(0.501, 10) == 6
