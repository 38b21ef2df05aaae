import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from sdd.diff import apply_diff, apply_diff_adjoint, diff_gram_spectrum, diff_matrix
from sdd.errors import ArgumentError

from conftest import dense_diff


def test_fiber_with_wraparound():
    np.testing.assert_array_equal(apply_diff(np.array([1.0, 2, 4, 7]), 1), [1, 2, 3, -6])


def test_constants_vanish():
    c = np.full((3, 4, 5), 2.5)
    for mode in (1, 2, 3):
        assert not apply_diff(c, mode).any()
        assert not apply_diff_adjoint(c, mode).any()


def test_invalid_mode():
    with pytest.raises(ArgumentError):
        apply_diff(np.zeros((2, 2)), 3)


def test_gram_of_delta_n4():
    e0 = np.array([1.0, 0, 0, 0])
    np.testing.assert_array_equal(apply_diff_adjoint(apply_diff(e0, 1), 1), [2, -1, 0, -1])


def test_spectrum_small_cases():
    np.testing.assert_array_equal(diff_gram_spectrum(1), [0.0])
    d = dense_diff(4)
    oracle = np.sort(np.linalg.eigvalsh(d.T @ d))
    np.testing.assert_allclose(np.sort(diff_gram_spectrum(4)), oracle, atol=1e-12)
    np.testing.assert_allclose(diff_gram_spectrum(4), [0, 2, 4, 2], atol=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 13, 16])
def test_spectrum_invariants(n):
    s = diff_gram_spectrum(n)
    assert s[0] == 0
    assert all(s[k] == s[n - k] for k in range(1, n))
    assert np.all((s >= 0) & (s <= 4))
    assert s.sum() == pytest.approx(2 * n if n > 1 else 0, abs=1e-12)
    d = dense_diff(n)
    np.testing.assert_allclose(np.sort(s), np.sort(np.linalg.eigvalsh(d.T @ d)), atol=1e-12)


@pytest.mark.parametrize("n", range(1, 17))
def test_dense_operator_equivalence(n, rng):
    d = dense_diff(n)
    np.testing.assert_array_equal(diff_matrix(n), d)
    x = rng.normal(size=(n, 3, 2))
    for mode, axis_len in ((1, n),):
        ref = np.einsum("ij,jab->iab", d, x)
        assert np.max(np.abs(apply_diff(x, mode) - ref)) <= 1e-12 * max(1, np.abs(ref).max())
        ref_t = np.einsum("ji,jab->iab", d, x)
        assert np.max(np.abs(apply_diff_adjoint(x, mode) - ref_t)) <= 1e-12 * max(1, np.abs(ref_t).max())


def test_adjoint_identity(rng):
    for _ in range(100):
        shape = tuple(rng.integers(1, 7, size=3))
        mode = int(rng.integers(1, 4))
        x, y = rng.normal(size=shape), rng.normal(size=shape)
        lhs = np.sum(apply_diff(x, mode) * y)
        rhs = np.sum(x * apply_diff_adjoint(y, mode))
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, np.abs(x).sum() * np.abs(y).max())


@given(arrays(np.float64, st.integers(1, 40), elements=st.floats(-1e3, 1e3, allow_nan=False)))
def test_parseval_consistency(v):
    # |D v|^2 = sum_k s_k |v_hat_k|^2 / n with the unnormalized forward DFT
    n = len(v)
    lhs = np.sum(apply_diff(v, 1) ** 2)
    rhs = np.sum(diff_gram_spectrum(n) * np.abs(np.fft.fft(v)) ** 2) / n
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-8)


def test_linearity(rng):
    x, y = rng.normal(size=(4, 5, 6)), rng.normal(size=(4, 5, 6))
    for mode in (1, 2, 3):
        np.testing.assert_allclose(apply_diff(2 * x - 3 * y, mode),
                                   2 * apply_diff(x, mode) - 3 * apply_diff(y, mode), atol=1e-12)


def test_matrix_rows_mode_is_d3_a(rng):
    a = rng.normal(size=(7, 3))
    np.testing.assert_allclose(apply_diff(a, 1), dense_diff(7) @ a, atol=1e-14)
