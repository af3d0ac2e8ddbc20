"""Channel centerlines between manifold ports.

A port's ``normal`` points from the port face into the channel, so a route
leaves port ``a`` travelling along ``a.normal`` and reaches port ``b``
travelling along ``-b.normal``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .bspline import BSplineCurve, clamped_uniform_knots

ROUTE_KINDS = ("bspline", "straight", "arc_fillet", "bezier3")
_AXIS_TOL = 1e-12


@dataclass(frozen=True)
class Port:
    position: np.ndarray
    normal: np.ndarray
    diameter: float

    def __post_init__(self):
        pos = np.array(self.position, dtype=float).reshape(3)
        n = np.array(self.normal, dtype=float).reshape(3)
        if abs(np.linalg.norm(n) - 1.0) > 1e-12:
            raise ValueError(f"port normal must be a unit vector, |n|={np.linalg.norm(n)!r}")
        if not self.diameter > 0.0:
            raise ValueError("port diameter must be positive")
        pos.setflags(write=False)
        n.setflags(write=False)
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "diameter", float(self.diameter))

    def to_dict(self) -> dict:
        return {"position": self.position.tolist(), "normal": self.normal.tolist(),
                "diameter": self.diameter}

    @classmethod
    def from_dict(cls, d) -> "Port":
        n = np.asarray(d["normal"], dtype=float)
        return cls(d["position"], n / np.linalg.norm(n), d["diameter"])


@dataclass(frozen=True)
class Route:
    curve: BSplineCurve
    diameter: float
    kind: str
    ports: tuple[Port, Port] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ROUTE_KINDS:
            raise ValueError(f"unknown route kind {self.kind!r}")
        if not self.diameter > 0.0:
            raise ValueError("route diameter must be positive")
        if self.ports is not None:
            ends = self.curve.evaluate(list(self.curve.domain))
            for end, port in zip(ends, self.ports):
                if np.linalg.norm(end - port.position) > 1e-9:
                    raise ValueError("route does not pass through its port positions")


def _check_ports(a: Port, b: Port) -> float:
    if np.linalg.norm(a.position - b.position) < 1e-12:
        raise ValueError("ports coincide")
    if abs(a.diameter - b.diameter) > 1e-12:
        raise ValueError("ports must share one diameter")
    return a.diameter


def route_channel(a: Port, b: Port, n_ctrl: int = 6, stiffness: float | None = None) -> Route:
    """Cubic clamped B-spline leaving each port face along its normal.

    Control points: the two port centres, one point ``stiffness`` along each
    port normal, and ``n_ctrl - 4`` points spaced evenly between those two.
    """
    D = _check_ports(a, b)
    if n_ctrl < 4:
        raise ValueError("n_ctrl must be at least 4")
    s = 3.0 * D if stiffness is None else float(stiffness)
    if not s > 0.0:
        raise ValueError("stiffness must be positive")
    p1 = a.position + s * a.normal
    p2 = b.position + s * b.normal
    inner = [p1 + (p2 - p1) * (k / (n_ctrl - 3)) for k in range(n_ctrl - 2)]
    P = np.vstack([a.position, *inner, b.position])
    curve = BSplineCurve(3, clamped_uniform_knots(n_ctrl, 3), P)
    return Route(curve, D, "bspline", (a, b))


def bezier3_route(a: Port, b: Port, handle: float | None = None) -> Route:
    """Single cubic Bezier with handles along the port normals."""
    D = _check_ports(a, b)
    h = 3.0 * D if handle is None else float(handle)
    if not h > 0.0:
        raise ValueError("handle length must be positive")
    P = np.vstack([a.position, a.position + h * a.normal, b.position + h * b.normal, b.position])
    curve = BSplineCurve(3, [0, 0, 0, 0, 1, 1, 1, 1], P)
    return Route(curve, D, "bezier3", (a, b))


def _axis_index(n) -> int:
    idx = int(np.argmax(np.abs(n)))
    if abs(abs(n[idx]) - 1.0) > _AXIS_TOL:
        raise ValueError("straight routing needs axis-aligned port normals")
    return idx


def _clean_polyline(pts) -> np.ndarray:
    out = [np.asarray(pts[0], dtype=float)]
    for p in pts[1:]:
        p = np.asarray(p, dtype=float)
        if np.linalg.norm(p - out[-1]) > 1e-12:
            out.append(p)
    merged = [out[0]]
    for k in range(1, len(out) - 1):
        d0 = out[k] - merged[-1]
        d1 = out[k + 1] - out[k]
        if np.linalg.norm(np.cross(d0, d1)) > 1e-12 * np.linalg.norm(d0) * np.linalg.norm(d1) \
                or np.dot(d0, d1) < 0.0:
            merged.append(out[k])
    merged.append(out[-1])
    return np.array(merged)


def _transverse_legs(start, offset, skip_axes):
    """Axis-by-axis moves covering ``offset``, skipping the given axes."""
    pts, cur = [], np.array(start, dtype=float)
    for ax in range(3):
        if ax in skip_axes or abs(offset[ax]) < 1e-15:
            continue
        cur = cur.copy()
        cur[ax] += offset[ax]
        pts.append(cur)
    return pts


def manhattan_polyline(a: Port, b: Port, lead: float | None = None) -> np.ndarray:
    """Axis-aligned polyline from ``a`` to ``b`` honouring both port normals."""
    _check_ports(a, b)
    ia, ib = _axis_index(a.normal), _axis_index(b.normal)
    da, db = a.normal, -b.normal
    d = b.position - a.position
    lead = 3.0 * a.diameter if lead is None else float(lead)
    if ia == ib and np.dot(da, db) > 0.0:
        axial = float(np.dot(d, da))
        if axial <= 0.0:
            raise ValueError("opposed ports face away from each other")
        mid = a.position + 0.5 * axial * da
        trans = d - axial * da
        pts = [a.position, mid, *_transverse_legs(mid, trans, {ia}), b.position]
    elif ia != ib:
        la, lb = float(np.dot(d, da)), float(np.dot(d, db))
        if la <= 0.0 or lb <= 0.0:
            raise ValueError("perpendicular ports must each face toward the other")
        corner = a.position + la * da
        rest = d - la * da - lb * db
        pts = [a.position, corner, *_transverse_legs(corner, rest, {ia, ib}), b.position]
    else:
        ext = max(0.0, float(np.dot(d, da))) + lead
        turn = a.position + ext * da
        trans = d - np.dot(d, da) * da
        if np.linalg.norm(trans) < 1e-12:
            raise ValueError("same-facing ports on one axis cannot be joined")
        legs = _transverse_legs(turn, trans, {ia})
        pts = [a.position, turn, *legs, b.position]
    return _clean_polyline(pts)


def _polyline_curve(pts) -> BSplineCurve:
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    knots = np.concatenate([[0.0], np.cumsum(seg) / seg.sum()])
    knots[-1] = 1.0
    return BSplineCurve(1, np.concatenate([[0.0], knots, [1.0]]), pts)


def straight_route(a: Port, b: Port, lead: float | None = None) -> Route:
    """Axis-aligned segments meeting at sharp corners."""
    pts = manhattan_polyline(a, b, lead)
    return Route(_polyline_curve(pts), a.diameter, "straight", (a, b))


def arc_fillet_route(a: Port, b: Port, radius: float | None = None,
                     lead: float | None = None) -> Route:
    """The straight route with each corner replaced by an exact circular arc.

    Built as a quadratic NURBS: straight pieces have collinear control points,
    each corner of turning angle t is an arc with middle weight cos(t/2).
    """
    R = 1.5 * a.diameter if radius is None else float(radius)
    if not R > 0.0:
        raise ValueError("fillet radius must be positive")
    pts = manhattan_polyline(a, b, lead)
    n = len(pts)
    dirs = np.diff(pts, axis=0)
    lens = np.linalg.norm(dirs, axis=1)
    dirs = dirs / lens[:, None]
    trims = np.zeros(n)
    for k in range(1, n - 1):
        cosang = float(np.clip(np.dot(dirs[k - 1], dirs[k]), -1.0, 1.0))
        turn = math.acos(cosang)
        if turn > math.pi - 1e-9:
            raise ValueError("cannot fillet a reversing corner")
        trims[k] = R * math.tan(0.5 * turn)
    for k in range(n - 1):
        if trims[k] + trims[k + 1] > lens[k] * (1.0 + 1e-12):
            raise ValueError(
                f"fillet radius {R:.4g} m too large for a {lens[k]:.4g} m segment")

    pieces = []  # (control points [3], weights [3])
    cur = pts[0]
    for k in range(1, n):
        end = pts[k] - trims[k] * dirs[k - 1] if k < n - 1 else pts[k]
        if np.linalg.norm(end - cur) > 1e-12:
            pieces.append(((cur, 0.5 * (cur + end), end), (1.0, 1.0, 1.0)))
        if k < n - 1:
            t_out = pts[k] + trims[k] * dirs[k]
            w = math.sqrt(0.5 * (1.0 + float(np.dot(dirs[k - 1], dirs[k]))))  # cos(turn/2)
            pieces.append(((end, pts[k], t_out), (1.0, w, 1.0)))
            cur = t_out
    P = [pieces[0][0][0]]
    W = [1.0]
    for ctrl, w in pieces:
        P.extend(ctrl[1:])
        W.extend(w[1:])
    m = len(pieces)
    knots = [0.0] * 3
    for j in range(1, m):
        knots += [j / m] * 2
    knots += [1.0] * 3
    curve = BSplineCurve(2, knots, np.array(P), np.array(W))
    return Route(curve, a.diameter, "arc_fillet", (a, b))


def build_route(kind: str, a: Port, b: Port, **kw) -> Route:
    builders = {"bspline": route_channel, "straight": straight_route,
                "arc_fillet": arc_fillet_route, "bezier3": bezier3_route}
    if kind == "arc":
        kind = "arc_fillet"
    if kind not in builders:
        raise ValueError(f"unknown route kind {kind!r}")
    return builders[kind](a, b, **kw)


def preset_ports(name: str, diameter: float = 3.2e-3) -> tuple[Port, Port]:
    """Two canonical manifold layouts: ``perpendicular`` (40 mm apart on two
    axes, 10 mm skew) and ``parallel`` (opposed faces, 30 mm lateral offset)."""
    if name == "perpendicular":
        return (Port((0.0, 0.0, 0.0), (1.0, 0.0, 0.0), diameter),
                Port((0.04, 0.04, 0.01), (0.0, -1.0, 0.0), diameter))
    if name == "parallel":
        return (Port((0.0, 0.0, 0.0), (1.0, 0.0, 0.0), diameter),
                Port((0.05, 0.03, 0.0), (-1.0, 0.0, 0.0), diameter))
    raise ValueError(f"unknown port layout {name!r}")


PRESET_LAYOUTS = ("perpendicular", "parallel")


# -- clearance --------------------------------------------------------------

@dataclass(frozen=True)
class Sphere:
    center: tuple
    radius: float


@dataclass(frozen=True)
class Capsule:
    p0: tuple
    p1: tuple
    radius: float


@dataclass(frozen=True)
class ClearanceResult:
    ok: bool
    sample_index: int | None = None
    point: tuple | None = None
    obstacle_index: int | None = None
    distance: float | None = None
    required: float | None = None

    def __bool__(self):
        return self.ok


def sample_route(route: Route, per_span: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Parameters and points sampled uniformly inside every knot span."""
    us = []
    for lo, hi in route.curve.spans():
        us.append(np.linspace(lo, hi, per_span + 1)[:-1])
    us.append([route.curve.domain[1]])
    u = np.concatenate(us)
    return u, route.curve.evaluate(u)


def _segment_distance(pts, p0, p1) -> np.ndarray:
    p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
    d = p1 - p0
    dd = float(np.dot(d, d))
    if dd == 0.0:
        return np.linalg.norm(pts - p0, axis=1)
    t = np.clip((pts - p0) @ d / dd, 0.0, 1.0)
    return np.linalg.norm(pts - (p0 + t[:, None] * d), axis=1)


def _polyline_distance(pts, poly) -> np.ndarray:
    tree = cKDTree(poly)
    _, idx = tree.query(pts)
    best = np.full(len(pts), np.inf)
    for off in (-1, 0):
        j0 = np.clip(idx + off, 0, len(poly) - 2)
        a, b = poly[j0], poly[j0 + 1]
        d = b - a
        dd = np.einsum("ij,ij->i", d, d)
        t = np.clip(np.einsum("ij,ij->i", pts - a, d) / np.where(dd > 0, dd, 1.0), 0.0, 1.0)
        best = np.minimum(best, np.linalg.norm(pts - (a + t[:, None] * d), axis=1))
    return best


def check_clearance(route: Route, obstacles=(), wall: float = 0.0,
                    per_span: int = 64) -> ClearanceResult:
    """First centerline sample violating the wall clearance, if any.

    Spheres and capsules need ``route.diameter / 2 + wall`` of clearance from
    their surface; another route needs the two bore radii plus one wall
    thickness around each bore between the centerlines.
    """
    if wall < 0.0:
        raise ValueError("wall must be non-negative")
    _, pts = sample_route(route, per_span)
    r = 0.5 * route.diameter
    worst = None
    for oi, obs in enumerate(obstacles):
        if isinstance(obs, Sphere):
            dist = np.linalg.norm(pts - np.asarray(obs.center, float), axis=1) - obs.radius
            need = r + wall
        elif isinstance(obs, Capsule):
            dist = _segment_distance(pts, obs.p0, obs.p1) - obs.radius
            need = r + wall
        elif isinstance(obs, Route):
            _, other = sample_route(obs, per_span * 4)
            dist = _polyline_distance(pts, other)
            need = r + 0.5 * obs.diameter + 2.0 * wall
        else:
            raise TypeError(f"unsupported obstacle type {type(obs).__name__}")
        bad = np.nonzero(dist < need)[0]
        if len(bad):
            i = int(bad[0])
            if worst is None or i < worst.sample_index:
                worst = ClearanceResult(False, i, tuple(pts[i].tolist()), oi,
                                        float(dist[i]), float(need))
    return worst if worst is not None else ClearanceResult(True)
