import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from sdd.errors import ArgumentError
from sdd.prox import group_shrink_fibers, reweight, soft_threshold


def grid_prox_l1(x, theta, step=1e-4):
    # brute force: argmin_t 0.5 (t - x)^2 + theta |t| on a grid covering [-|x|, |x|]
    lim = abs(x) + step
    t = np.arange(-lim, lim + step, step)
    return t[np.argmin(0.5 * (t - x) ** 2 + theta * np.abs(t))]


def radial_prox_l2(f, xi, steps=20001):
    # the minimizer lies on the ray through f, so a 1-D search over the radius suffices
    nrm = np.linalg.norm(f)
    if nrm == 0:
        return np.zeros_like(f)
    rad = np.linspace(0.0, nrm, steps)
    obj = 0.5 * (rad - nrm) ** 2 + xi * rad
    return f / nrm * rad[np.argmin(obj)]


def test_soft_threshold_closed_form():
    assert soft_threshold(3.0, 1.0) == 2.0
    assert soft_threshold(-0.5, 1.0) == 0.0
    x = np.array([-2.0, 0.3, 5.0])
    np.testing.assert_array_equal(soft_threshold(x, 0.0), x)
    with pytest.raises(ArgumentError):
        soft_threshold(x, -1.0)


def test_soft_threshold_grid_oracle():
    rng = np.random.default_rng(11)
    xs = rng.uniform(-5, 5, 1000)
    thetas = rng.uniform(0, 3, 1000)
    for x, th in zip(xs, thetas):
        assert abs(soft_threshold(x, th) - grid_prox_l1(x, th)) <= 1e-3


def test_group_shrink_examples():
    z = np.array([3.0, 4.0]).reshape(1, 1, 2)
    np.testing.assert_allclose(group_shrink_fibers(z, np.ones((1, 1))).ravel(), [2.4, 3.2])
    assert not group_shrink_fibers(z, np.full((1, 1), 5.0)).any()
    assert not group_shrink_fibers(z, np.full((1, 1), 7.0)).any()
    with pytest.raises(ArgumentError):
        group_shrink_fibers(z, np.ones((2, 1)))


def test_group_shrink_radial_oracle():
    rng = np.random.default_rng(12)
    for _ in range(1000):
        f = rng.normal(size=int(rng.integers(1, 6))) * 2
        xi = rng.uniform(0, 3)
        got = group_shrink_fibers(f.reshape(1, 1, -1), np.full((1, 1), xi)).ravel()
        assert np.max(np.abs(got - radial_prox_l2(f, xi))) <= 1e-3


def test_group_shrink_zero_threshold_identity(rng):
    z = rng.normal(size=(4, 5, 3))
    np.testing.assert_allclose(group_shrink_fibers(z, np.zeros((4, 5))), z, rtol=1e-15)


def test_group_shrink_preserves_direction(rng):
    z = rng.normal(size=(6, 6, 4))
    out = group_shrink_fibers(z, np.full((6, 6), 0.5))
    cross = np.einsum("ijk,ijk->ij", out, z)
    nrm = np.linalg.norm(out, axis=2) * np.linalg.norm(z, axis=2)
    live = nrm > 0
    np.testing.assert_allclose(cross[live], nrm[live], rtol=1e-12)


def test_reweight_examples():
    np.testing.assert_array_equal(reweight(np.zeros((2, 2, 2)), "target", 0.01), 100.0)
    w = reweight(np.array([3.0, 4.0]).reshape(1, 1, 2), "group", 0.01)
    assert w.shape == (1, 1) and w[0, 0] == pytest.approx(1 / 5.01)
    with pytest.raises(ArgumentError):
        reweight(np.zeros(3), "target", 0.0)
    with pytest.raises(ArgumentError):
        reweight(np.zeros(3), "cubic")


@given(st.lists(st.integers(-5000, 5000), min_size=2, max_size=20))
def test_reweight_monotone_and_bounded(ints):
    # centesimal grid, so distinct magnitudes are resolvable after adding epsilon
    z = np.array(ints) / 100.0
    w = reweight(z, "elementwise", 0.01)
    assert np.all((w > 0) & (w <= 100.0))
    mag = np.abs(z)
    for i in range(len(z)):
        for j in range(len(z)):
            if mag[i] > mag[j]:
                assert w[i] < w[j]


@given(arrays(np.float64, (3, 3, 2), elements=st.floats(-10, 10, allow_nan=False)),
       arrays(np.float64, (3, 3, 2), elements=st.floats(-10, 10, allow_nan=False)),
       st.floats(0, 5))
def test_non_expansive(x, y, theta):
    assert (np.linalg.norm(soft_threshold(x, theta) - soft_threshold(y, theta))
            <= np.linalg.norm(x - y) + 1e-12)
    assert np.abs(soft_threshold(x, theta)).sum() <= np.abs(x).sum() + 1e-12
