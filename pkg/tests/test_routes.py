import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ehankle.channels import (
    MITER_K, PRESET_LAYOUTS, ROUTE_KINDS, BSplineCurve, Capsule, Port, Route, Sphere,
    arc_fillet_route, arc_length, bend_coefficient, bezier3_route, build_route,
    check_clearance, curvature_profile, export_route, flow_for_velocity, preset_ports,
    pressure_loss_estimate, route_channel, sharp_corners, straight_route, tube_mesh,
)
from ehankle.hydraulics import FluidProps
from ehankle.mesh import read_stl

D = 3.2e-3
Q_OP = flow_for_velocity(2.5, D)


def _coaxial(L=0.05):
    return Port((0, 0, 0), (1, 0, 0), D), Port((L, 0, 0), (-1, 0, 0), D)


def _square_perpendicular():
    return Port((0, 0, 0), (1, 0, 0), D), Port((0.04, 0.04, 0), (0, -1, 0), D)


def _unit(v):
    return v / np.linalg.norm(v)


def test_port_normal_must_be_unit():
    with pytest.raises(ValueError):
        Port((0, 0, 0), (2, 0, 0), D)


def test_coaxial_bspline_is_the_segment():
    a, b = _coaxial()
    r = route_channel(a, b)
    X = r.curve.evaluate(np.linspace(0, 1, 200))
    assert np.max(np.abs(X[:, 1:])) < 1e-9
    assert np.all(np.diff(X[:, 0]) > 0)


def test_coaxial_kinds_share_length():
    a, b = _coaxial()
    lengths = [arc_length(build_route(k, a, b)) for k in ROUTE_KINDS]
    np.testing.assert_allclose(lengths, 0.05, rtol=1e-12)


@pytest.mark.parametrize("layout", PRESET_LAYOUTS)
@pytest.mark.parametrize("kind", ROUTE_KINDS)
def test_every_route_meets_its_ports(layout, kind):
    a, b = preset_ports(layout, D)
    r = build_route(kind, a, b)
    lo, hi = r.curve.domain
    ends = r.curve.evaluate([lo, hi])
    assert np.linalg.norm(ends[0] - a.position) < 1e-9
    assert np.linalg.norm(ends[1] - b.position) < 1e-9
    t = r.curve.tangent([lo, hi])
    assert _unit(t[0]) @ a.normal > 0.999
    assert _unit(t[1]) @ -b.normal > 0.999


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(0.01, 0.08))
def test_random_ports_align_bspline_ends(x, y, z, dist):
    n = np.array([x, y, z])
    if np.linalg.norm(n) < 1e-3:
        n = np.array([0.0, 0.0, 1.0])
    a = Port((0, 0, 0), (1, 0, 0), D)
    b = Port(np.array([dist, 0.02, 0.0]), _unit(n), D)
    r = route_channel(a, b)
    t = r.curve.tangent([0.0, 1.0])
    assert _unit(t[0]) @ a.normal > 0.999
    assert _unit(t[1]) @ -b.normal > 0.999


def test_square_perpendicular_straight_has_one_right_angle():
    r = straight_route(*_square_perpendicular())
    np.testing.assert_allclose(sharp_corners(r), [math.pi / 2], atol=1e-9)


def test_skew_perpendicular_preset_has_two_right_angles():
    r = straight_route(*preset_ports("perpendicular", D))
    np.testing.assert_allclose(sharp_corners(r), [math.pi / 2] * 2, atol=1e-9)


def test_bezier3_equals_four_point_bspline():
    a, b = preset_ports("perpendicular", D)
    r1 = bezier3_route(a, b, handle=0.01)
    r2 = route_channel(a, b, n_ctrl=4, stiffness=0.01)
    np.testing.assert_array_equal(r1.curve.control_points, r2.curve.control_points)
    np.testing.assert_array_equal(r1.curve.knots, r2.curve.knots)


def test_straight_curvature_is_zero():
    a, b = _coaxial()
    prof = curvature_profile(straight_route(a, b))
    assert np.all(prof.kappa == 0.0)
    assert prof.min_bend_radius == math.inf


@pytest.mark.parametrize("R", [2e-3, 4.8e-3, 1e-2])
def test_fillet_arc_curvature_is_reciprocal_radius(R):
    r = arc_fillet_route(*_square_perpendicular(), radius=R)
    k = curvature_profile(r, 512).kappa
    assert np.all(np.minimum(np.abs(k), np.abs(k - 1 / R)) < 1e-6 / R)
    assert np.any(np.abs(k - 1 / R) < 1e-6 / R)


def test_fillet_too_large_is_rejected():
    with pytest.raises(ValueError, match="too large"):
        arc_fillet_route(*_square_perpendicular(), radius=0.05)


@given(st.floats(0, 2 * np.pi), st.floats(0, np.pi))
def test_curvature_invariant_under_rotation(yaw, pitch):
    rz = np.array([[np.cos(yaw), -np.sin(yaw), 0], [np.sin(yaw), np.cos(yaw), 0], [0, 0, 1]])
    rx = np.array([[1, 0, 0], [0, np.cos(pitch), -np.sin(pitch)], [0, np.sin(pitch), np.cos(pitch)]])
    r = route_channel(*preset_ports("perpendicular", D))
    moved = Route(r.curve.transformed(rx @ rz, np.array([0.1, -0.2, 0.3])), D, "bspline")
    np.testing.assert_allclose(curvature_profile(moved).kappa, curvature_profile(r).kappa,
                               rtol=1e-8, atol=1e-8)


def test_darcy_straight_pipe_oracle():
    a, b = _coaxial(0.1)
    fl = FluidProps(1.4e9, 850.0, 46e-6)
    est = pressure_loss_estimate(straight_route(a, b), Q_OP, fl)
    re = 2.5 * D / 46e-6
    assert est.reynolds == pytest.approx(re, rel=1e-12)
    assert est.reynolds == pytest.approx(174, rel=2e-3)
    assert est.friction_factor == pytest.approx(0.368, rel=1e-3)
    assert est.friction_loss == pytest.approx(64 / re * (0.1 / D) * 0.5 * 850 * 2.5 ** 2, rel=1e-9)
    assert est.friction_loss == pytest.approx(3.05e4, rel=2e-3)
    assert est.bend_loss == 0.0


def test_bend_coefficient_calibration():
    assert bend_coefficient(0.0) == pytest.approx(0.05)
    assert bend_coefficient(0.2) <= 0.1  # R/D = 5
    assert bend_coefficient(1e9) == pytest.approx(MITER_K, rel=1e-6)
    x = np.linspace(0, 50, 500)
    assert np.all(np.diff(bend_coefficient(x)) > 0)


def test_miter_costs_its_coefficient():
    r = straight_route(*_square_perpendicular())
    est = pressure_loss_estimate(r, Q_OP)
    dyn = 0.5 * 850 * (Q_OP / (math.pi * D * D / 4)) ** 2
    assert est.bend_loss == pytest.approx(MITER_K * dyn, rel=1e-12)


@given(st.floats(1e-7, 1e-4), st.floats(1.001, 3.0))
@settings(max_examples=30)
def test_loss_increases_with_flow(q, factor):
    r = route_channel(*preset_ports("parallel", D))
    assert pressure_loss_estimate(r, q * factor).total > pressure_loss_estimate(r, q).total


def _arc(radius, length):
    th = length / radius
    w = math.cos(th / 2)
    P = [[radius, 0, 0], [radius, radius * math.tan(th / 2), 0],
         [radius * math.cos(th), radius * math.sin(th), 0]]
    return Route(BSplineCurve(2, [0, 0, 0, 1, 1, 1], P, [1, w, 1]), D, "arc_fillet")


@given(st.floats(0.005, 0.05), st.floats(1.01, 3.0))
@settings(max_examples=30)
def test_bend_loss_grows_with_curvature_at_fixed_length(R, shrink):
    L = 0.005
    wide, tight = _arc(R, L), _arc(R / shrink, L)
    assert arc_length(wide) == pytest.approx(L, rel=1e-9)
    assert arc_length(tight) == pytest.approx(L, rel=1e-9)
    assert pressure_loss_estimate(tight, Q_OP).bend_loss >= pressure_loss_estimate(wide, Q_OP).bend_loss


@pytest.mark.parametrize("layout", PRESET_LAYOUTS)
def test_bspline_beats_mitered_straight(layout):
    a, b = preset_ports(layout, D)
    smooth = pressure_loss_estimate(route_channel(a, b), Q_OP)
    sharp = pressure_loss_estimate(straight_route(a, b), Q_OP)
    assert smooth.total < sharp.total


def test_clearance_without_obstacles_passes():
    assert check_clearance(route_channel(*preset_ports("parallel", D)), [], 1e-3).ok


def test_clearance_fails_at_centered_obstacle():
    a, b = _coaxial(0.06)
    r = straight_route(a, b)
    res = check_clearance(r, [Sphere((0.03, 0.0, 0.0), 1e-4)], wall=1e-3)
    assert not res.ok and res.obstacle_index == 0
    assert abs(res.point[0] - 0.03) <= res.required + 1e-4
    capsule = check_clearance(r, [Capsule((0.03, -0.01, 0), (0.03, 0.01, 0), 1e-4)], wall=1e-3)
    assert not capsule.ok


def test_parallel_routes_at_exact_spacing():
    wall = 1e-3
    gap = D + 2 * wall
    a, b = _coaxial(0.06)
    r1 = straight_route(a, b)
    shift = np.array([0, gap + 1e-6, 0])
    r2 = straight_route(Port(a.position + shift, a.normal, D), Port(b.position + shift, b.normal, D))
    assert check_clearance(r1, [r2], wall).ok
    shift = np.array([0, gap - 1e-6, 0])
    r3 = straight_route(Port(a.position + shift, a.normal, D), Port(b.position + shift, b.normal, D))
    assert not check_clearance(r1, [r3], wall).ok


def test_straight_tube_mesh_is_a_capped_cylinder(tmp_path):
    L = 0.05
    r = straight_route(*_coaxial(L))
    mesh = tube_mesh(r, 64)
    exact = math.pi * D * L + 2 * math.pi * (D / 2) ** 2
    assert mesh.area() == pytest.approx(exact, rel=0.02)
    assert mesh.is_watertight()
    assert mesh.volume() == pytest.approx(math.pi * (D / 2) ** 2 * L, rel=0.01)


@pytest.mark.parametrize("kind", ROUTE_KINDS)
def test_export_files(kind, tmp_path):
    r = build_route(kind, *preset_ports("perpendicular", D))
    paths = export_route(r, tmp_path / kind)
    rows = np.loadtxt(paths["csv"], delimiter=",", skiprows=1)
    assert paths["csv"].read_text().splitlines()[0] == "s_m,x_m,y_m,z_m,kappa_per_m"
    assert np.all(np.diff(rows[:, 0]) > 0)
    assert rows[-1, 0] == pytest.approx(arc_length(r), rel=1e-9)
    mesh = read_stl(paths["stl"])
    assert mesh.is_watertight()
    first = {k: p.read_bytes() for k, p in paths.items()}
    export_route(r, tmp_path / kind)
    assert all(p.read_bytes() == first[k] for k, p in paths.items())
