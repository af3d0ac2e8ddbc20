import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ehankle.topo import (
    DensityField, TopoError, TopoProblem, assemble_and_solve, bracket, cantilever,
    element_stiffness, export_density_png_csv, node_id, oc_update, read_density_csv, run_topo,
    sensitivity_filter,
)


def q4_stiffness_by_quadrature(E=1.0, nu=0.3):
    """Bilinear unit-square plane-stress element, 2x2 Gauss, dof order
    matching ``element_stiffness`` (nodes counter-clockwise from lower left)."""
    C = E / (1 - nu ** 2) * np.array([[1, nu, 0], [nu, 1, 0], [0, 0, (1 - nu) / 2]])
    xy = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    K = np.zeros((8, 8))
    g = 0.5 / math.sqrt(3)
    for a in (0.5 - g, 0.5 + g):
        for b in (0.5 - g, 0.5 + g):
            dN = np.array([[-(1 - b), -(1 - a)], [1 - b, -a], [b, a], [-b, 1 - a]])
            B = np.zeros((3, 8))
            B[0, 0::2] = dN[:, 0]
            B[1, 1::2] = dN[:, 1]
            B[2, 0::2] = dN[:, 1]
            B[2, 1::2] = dN[:, 0]
            K += 0.25 * B.T @ C @ B
    return K


def test_element_stiffness_matches_quadrature():
    np.testing.assert_allclose(element_stiffness(0.3), q4_stiffness_by_quadrature(), atol=1e-12)


def _one_element(fx=0.5):
    # left nodes: one pinned, one on a roller, so the bar may contract freely
    fixed = ((node_id(0, 0, 1), 0), (node_id(0, 0, 1), 1), (node_id(0, 1, 1), 0))
    loads = ((node_id(1, 0, 1), 0, fx), (node_id(1, 1, 1), 0, fx))
    return TopoProblem(1, 1, 1.0, 3.0, 1.0, loads, fixed)


def test_single_element_tension_patch():
    # unit stress on a unit square with E = 1 stretches it by exactly 1
    u, c = assemble_and_solve(_one_element(), np.ones((1, 1)))
    assert c == pytest.approx(1.0, rel=1e-12)
    right = [2 * node_id(1, j, 1) for j in (0, 1)]
    np.testing.assert_allclose(u[right], 1.0, rtol=1e-12)


def test_zero_load_gives_zero_response():
    p = cantilever(6, 3).with_(loads=())
    u, c = assemble_and_solve(p, np.full((3, 6), 0.5))
    assert c == 0.0 and np.all(u == 0.0)


@given(st.floats(0.1, 10.0))
@settings(max_examples=10, deadline=None)
def test_response_is_linear_in_load(s):
    rho = np.random.default_rng(0).uniform(0.2, 1.0, (4, 8))
    u1, c1 = assemble_and_solve(cantilever(8, 4, load=1.0), rho)
    u2, c2 = assemble_and_solve(cantilever(8, 4, load=s), rho)
    np.testing.assert_allclose(u2, s * u1, rtol=1e-9, atol=1e-15)
    assert c2 == pytest.approx(s * s * c1, rel=1e-9)


def test_unsupported_structure_is_reported():
    with pytest.raises(TopoError):
        assemble_and_solve(cantilever(4, 2).with_(fixed_dofs=()), np.ones((2, 4)))


def test_filter_with_unit_radius_is_identity():
    rng = np.random.default_rng(1)
    rho, dc = rng.uniform(0.01, 1, (5, 7)), -rng.random((5, 7))
    np.testing.assert_allclose(sensitivity_filter(rho, dc, 1.0), dc, atol=1e-12)


def test_filter_keeps_uniform_sensitivities():
    out = sensitivity_filter(np.full((6, 9), 0.4), np.full((6, 9), -2.5), 2.5)
    np.testing.assert_allclose(out, -2.5, rtol=1e-12)


def test_filter_smooths_checkerboard():
    iy, ix = np.indices((8, 12))
    dc = -1.0 - ((ix + iy) % 2)
    rho = np.full(dc.shape, 0.5)

    def jump(a):
        return max(np.abs(np.diff(a, axis=0)).max(), np.abs(np.diff(a, axis=1)).max())

    assert jump(sensitivity_filter(rho, dc, 1.5)) < jump(dc)


def test_oc_examples():
    rho = np.full((4, 6), 0.5)
    out = oc_update(rho, np.full((4, 6), -1.0), 0.4)
    np.testing.assert_allclose(out, 0.4, atol=1e-6)
    dc = -np.random.default_rng(2).random((4, 6)) - 0.1
    np.testing.assert_array_equal(oc_update(rho, dc, 0.4, move=0.0), rho)
    with pytest.raises(TopoError):
        oc_update(rho, -dc, 0.4)


@given(st.floats(0.1, 0.9), st.integers(0, 10_000))
@settings(max_examples=30)
def test_oc_meets_volume(volfrac, seed):
    rng = np.random.default_rng(seed)
    rho = np.clip(volfrac + rng.uniform(-0.05, 0.05, (10, 20)), 1e-3, 1.0)
    dc = -rng.random((10, 20)) ** 3 - 1e-6
    new = oc_update(rho, dc, volfrac)
    assert abs(new.mean() - volfrac) < 1e-4
    assert np.all(np.abs(new - rho) <= 0.2 + 1e-12)


def test_full_volume_stays_solid():
    p = cantilever(12, 4, volfrac=1.0)
    field = run_topo(p)
    np.testing.assert_array_equal(field.rho, 1.0)
    _, c_full = assemble_and_solve(p, np.ones((4, 12)))
    assert field.final_compliance == pytest.approx(c_full, rel=1e-12)
    assert field.iterations == 1 and field.converged


@pytest.fixture(scope="module")
def cantilever_run():
    return run_topo(cantilever(60, 20, 0.5, 3.0, 1.5), max_iters=200, tol=0.01)


def test_cantilever_beats_uniform_design(cantilever_run):
    _, c_uniform = assemble_and_solve(cantilever(), np.full((20, 60), 0.5))
    assert cantilever_run.converged and cantilever_run.iterations <= 200
    assert cantilever_run.final_compliance < c_uniform


def test_cantilever_volume_trace(cantilever_run):
    assert np.max(np.abs(np.array(cantilever_run.mean_density) - 0.5)) < 0.005


def test_cantilever_compliance_settles(cantilever_run):
    c = cantilever_run.compliance
    assert all(c[k + 1] <= 1.01 * c[k] for k in range(10, len(c) - 1))


@pytest.mark.slow
def test_refined_mesh_gives_similar_compliance(cantilever_run):
    fine = run_topo(cantilever(120, 40, 0.5, 3.0, 3.0), max_iters=200, tol=0.01)
    assert fine.final_compliance == pytest.approx(cantilever_run.final_compliance, rel=0.15)


def test_passive_elements_hold_their_clamp():
    p = bracket(30, 20)
    void = frozenset(range(0, 20 * 30, 37)) - p.passive_solid
    p = p.with_(passive_void=void)
    seen = []
    field = run_topo(p, max_iters=15, callback=lambda it, c, ch: seen.append(it))
    flat = field.rho.ravel(order="F")
    assert np.all(flat[list(p.passive_solid)] == 1.0)
    assert np.all(flat[list(void)] == 1e-3)
    assert seen


def test_problem_validation():
    with pytest.raises(ValueError):
        TopoProblem(4, 2, volfrac=0.0)
    with pytest.raises(ValueError):
        TopoProblem(4, 2, rmin=0.5)
    with pytest.raises(ValueError):
        TopoProblem(4, 2, passive_solid=frozenset({1}), passive_void=frozenset({1}))


def test_export_round_trip(tmp_path):
    import matplotlib.image as mpimg
    rho = np.random.default_rng(3).uniform(1e-3, 1, (5, 9))
    field = DensityField(rho, 3, [3.0, 2.0, 1.5], [0.5] * 3, [0.2, 0.1, 0.0], True)
    out = export_density_png_csv(field, tmp_path / "d")
    back = read_density_csv(out["csv"])
    assert back.shape == (5, 9)
    np.testing.assert_array_equal(back, rho)
    solid = DensityField(np.ones((5, 9)), 1, [1.0], [1.0], [0.0], True)
    out = export_density_png_csv(solid, tmp_path / "s")
    img = mpimg.imread(out["png"])
    assert img.shape[:2] == (20, 36)
    assert np.all(img[..., :3] == 0.0)
    assert out["history"].read_text().splitlines()[0] == "iteration,compliance,mean_density,change"
