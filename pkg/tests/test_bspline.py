import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ehankle.channels import (
    BSplineCurve, basis_matrix, bspline_basis, bspline_eval, bspline_tangent,
    clamped_uniform_knots,
)

coords = st.floats(-1.0, 1.0, allow_nan=False)


@st.composite
def curves(draw, degree=None):
    p = draw(st.integers(1, 4)) if degree is None else degree
    n = draw(st.integers(p + 1, 9))
    pts = draw(arrays(float, (n, 3), elements=coords))
    return BSplineCurve(p, clamped_uniform_knots(n, p), pts)


def test_degree_zero_indicator():
    assert bspline_basis(0, 0, 0.5, [0, 1]) == 1.0


def test_linear_hat_midpoint():
    k = [0, 0, 1, 1]
    assert bspline_basis(0, 1, 0.5, k) == 0.5
    assert bspline_basis(1, 1, 0.5, k) == 0.5


def test_scalar_and_table_agree():
    k = clamped_uniform_knots(7, 3)
    u = np.linspace(0, 1, 37)
    B = basis_matrix(u, 3, k)
    for j, uj in enumerate(u):
        for i in range(7):
            assert B[j, i] == pytest.approx(bspline_basis(i, 3, uj, k), abs=1e-14)


@pytest.mark.parametrize("p", [1, 2, 3, 5])
def test_partition_of_unity_and_nonnegativity(p):
    rng = np.random.default_rng(7)
    u = np.concatenate([rng.random(10_000), [0.0, 1.0]])
    B = basis_matrix(u, p, clamped_uniform_knots(p + 6, p))
    assert np.max(np.abs(B.sum(axis=1) - 1.0)) < 1e-12
    assert B.min() >= 0.0


def test_basis_derivative_rows_sum_to_zero():
    k = clamped_uniform_knots(8, 3)
    dB = basis_matrix(np.linspace(0, 1, 101), 3, k, deriv=1)
    assert np.max(np.abs(dB.sum(axis=1))) < 1e-10


def test_bad_knots_rejected():
    with pytest.raises(ValueError):
        basis_matrix([0.5], 1, [0, 1, 0.5, 1])
    with pytest.raises(ValueError):
        bspline_basis(0, 1, 2.0, [0, 0, 1, 1])


@given(curves())
def test_clamped_endpoints_are_exact(c):
    np.testing.assert_array_equal(bspline_eval(c, 0.0), c.control_points[0])
    np.testing.assert_array_equal(bspline_eval(c, 1.0), c.control_points[-1])


@given(arrays(float, 3, elements=coords), st.floats(0, 1))
def test_identical_points_give_that_point(pt, u):
    c = BSplineCurve(3, clamped_uniform_knots(6, 3), np.tile(pt, (6, 1)))
    np.testing.assert_allclose(bspline_eval(c, u), pt, atol=1e-15)


def test_collinear_cubic_stays_on_line():
    rng = np.random.default_rng(3)
    d = np.array([0.3, -0.2, 0.9]) / np.linalg.norm([0.3, -0.2, 0.9])
    P = np.array([0.1, 0.2, 0.3]) + np.sort(rng.random(7))[:, None] * d
    c = BSplineCurve(3, clamped_uniform_knots(7, 3), P)
    X = c.evaluate(np.linspace(0, 1, 100)) - P[0]
    off = X - (X @ d)[:, None] * d
    assert np.max(np.linalg.norm(off, axis=1)) < 1e-12
    T = c.tangent(np.linspace(0.01, 0.99, 50))
    T /= np.linalg.norm(T, axis=1)[:, None]
    np.testing.assert_allclose(np.abs(T @ d), 1.0, atol=1e-12)


def _central_difference_error(c, u, h=1e-6):
    t = c.tangent(u)
    fd = (c.evaluate(u + h) - c.evaluate(u - h)) / (2 * h)
    return np.linalg.norm(t - fd, axis=1) / np.linalg.norm(t, axis=1)


def test_tangent_matches_central_difference():
    rng = np.random.default_rng(11)
    c = BSplineCurve(3, clamped_uniform_knots(8, 3), rng.normal(size=(8, 3)))
    # stay off the interior knots, where the finite difference straddles spans
    u = np.linspace(0.01, 0.99, 100)
    assert np.max(_central_difference_error(c, u)) < 1e-6


def test_rational_tangent_matches_central_difference():
    w = np.sqrt(0.5)
    c = BSplineCurve(2, [0, 0, 0, 1, 1, 1], [[1, 0, 0], [1, 1, 0], [0, 1, 0]], [1, w, 1])
    u = np.linspace(0.01, 0.99, 100)
    assert np.max(_central_difference_error(c, u)) < 1e-6
    np.testing.assert_allclose(np.linalg.norm(c.evaluate(u), axis=1), 1.0, atol=1e-14)


@given(curves(), st.floats(0, 1))
def test_tangent_scales_with_control_points(c, u):
    big = BSplineCurve(c.degree, c.knots, 2.0 * c.control_points)
    np.testing.assert_allclose(bspline_tangent(big, u), 2.0 * bspline_tangent(c, u), atol=1e-12)


@given(curves(degree=3), st.floats(0, 2 * np.pi), arrays(float, 3, elements=coords))
def test_evaluation_commutes_with_rigid_motion(c, ang, shift):
    R = np.array([[np.cos(ang), -np.sin(ang), 0], [np.sin(ang), np.cos(ang), 0], [0, 0, 1]])
    moved = c.transformed(R, shift)
    u = np.linspace(0, 1, 17)
    np.testing.assert_allclose(moved.evaluate(u), c.evaluate(u) @ R.T + shift, atol=1e-12)
