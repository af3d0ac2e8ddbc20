"""Clamped (optionally rational) B-spline curves via the Cox-de Boor recursion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _check_knots(knots) -> np.ndarray:
    k = np.asarray(knots, dtype=float)
    if k.ndim != 1 or len(k) < 2:
        raise ValueError("knot vector must be 1-D with at least two entries")
    if np.any(np.diff(k) < 0.0):
        raise ValueError("knot vector must be non-decreasing")
    if not k[-1] > k[0]:
        raise ValueError("knot vector spans an empty parameter range")
    return k


def _last_span(knots: np.ndarray) -> int:
    """Index of the last non-empty knot span; the domain end belongs to it."""
    return int(np.nonzero(knots[1:] > knots[:-1])[0][-1])


def bspline_basis(i: int, p: int, u: float, knots) -> float:
    """Value of N_{i,p}(u).  Spans are half-open except the last non-empty
    one, which includes the domain end; 0/0 terms count as zero."""
    knots = _check_knots(knots)
    n_basis = len(knots) - p - 1
    if p < 0:
        raise ValueError("degree must be non-negative")
    if not 0 <= i < n_basis:
        raise IndexError(f"basis index {i} out of range [0, {n_basis})")
    if not knots[0] <= u <= knots[-1]:
        raise ValueError(f"u={u} outside knot range [{knots[0]}, {knots[-1]}]")
    last = _last_span(knots)

    def N(j, q):
        if q == 0:
            if knots[j] <= u < knots[j + 1]:
                return 1.0
            return 1.0 if (j == last and u == knots[-1]) else 0.0
        out = 0.0
        d1 = knots[j + q] - knots[j]
        if d1 > 0.0:
            out += (u - knots[j]) / d1 * N(j, q - 1)
        d2 = knots[j + q + 1] - knots[j + 1]
        if d2 > 0.0:
            out += (knots[j + q + 1] - u) / d2 * N(j + 1, q - 1)
        return out

    return N(i, p)


def basis_matrix(u, p: int, knots, deriv: int = 0) -> np.ndarray:
    """(len(u), n_basis) table of the ``deriv``-th derivative of every N_{i,p}."""
    knots = _check_knots(knots)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(u < knots[0]) or np.any(u > knots[-1]):
        raise ValueError("parameter outside knot range")
    last = _last_span(knots)
    m = len(knots) - 1
    N0 = ((knots[:-1][None, :] <= u[:, None]) & (u[:, None] < knots[1:][None, :])).astype(float)
    N0[u == knots[-1], :] = 0.0
    N0[u == knots[-1], last] = 1.0
    tables = [N0]
    for q in range(1, p + 1):
        prev = tables[-1]
        cols = m - q
        out = np.zeros((len(u), cols))
        for j in range(cols):
            d1 = knots[j + q] - knots[j]
            if d1 > 0.0:
                out[:, j] += (u - knots[j]) / d1 * prev[:, j]
            d2 = knots[j + q + 1] - knots[j + 1]
            if d2 > 0.0:
                out[:, j] += (knots[j + q + 1] - u) / d2 * prev[:, j + 1]
        tables.append(out)
    if deriv > p:
        return np.zeros((len(u), m - p))

    def D(k, q):
        if k == 0:
            return tables[q]
        low = D(k - 1, q - 1)
        cols = m - q
        out = np.zeros((len(u), cols))
        for j in range(cols):
            d1 = knots[j + q] - knots[j]
            if d1 > 0.0:
                out[:, j] += q / d1 * low[:, j]
            d2 = knots[j + q + 1] - knots[j + 1]
            if d2 > 0.0:
                out[:, j] -= q / d2 * low[:, j + 1]
        return out

    return D(deriv, p)


def clamped_uniform_knots(n_ctrl: int, p: int) -> np.ndarray:
    """Clamped knot vector on [0, 1] with uniformly spaced interior knots."""
    if n_ctrl < p + 1:
        raise ValueError("need at least degree + 1 control points")
    interior = np.linspace(0.0, 1.0, n_ctrl - p + 1)[1:-1]
    return np.concatenate([np.zeros(p + 1), interior, np.ones(p + 1)])


@dataclass(frozen=True)
class BSplineCurve:
    degree: int
    knots: np.ndarray
    control_points: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        p = int(self.degree)
        if p < 1:
            raise ValueError("degree must be at least 1")
        k = _check_knots(self.knots)
        P = np.array(self.control_points, dtype=float)
        if P.ndim != 2 or P.shape[1] != 3:
            raise ValueError("control points must be an (n, 3) array")
        if len(k) != len(P) + p + 1:
            raise ValueError(f"knot count {len(k)} != control points {len(P)} + degree {p} + 1")
        if not (np.all(k[: p + 1] == k[0]) and np.all(k[-p - 1:] == k[-1])):
            raise ValueError("knot vector must be clamped (end multiplicity degree + 1)")
        w = None
        if self.weights is not None:
            w = np.array(self.weights, dtype=float)
            if w.shape != (len(P),) or np.any(w <= 0.0):
                raise ValueError("weights must be positive, one per control point")
            w.setflags(write=False)
        k = k.copy()
        k.setflags(write=False)
        P.setflags(write=False)
        object.__setattr__(self, "degree", p)
        object.__setattr__(self, "knots", k)
        object.__setattr__(self, "control_points", P)
        object.__setattr__(self, "weights", w)

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.knots[0]), float(self.knots[-1])

    @property
    def rational(self) -> bool:
        return self.weights is not None

    def spans(self) -> list[tuple[float, float]]:
        """Non-empty knot intervals in order."""
        k = np.unique(self.knots)
        return list(zip(k[:-1].tolist(), k[1:].tolist()))

    def derivatives(self, u, order: int = 0) -> list[np.ndarray]:
        """Point and derivatives up to ``order`` (max 2) at each ``u``; arrays of shape (n, 3)."""
        if order > 2:
            raise ValueError("derivatives above second order are not provided")
        u = np.atleast_1d(np.asarray(u, dtype=float))
        lo, hi = self.domain
        if np.any(u < lo) or np.any(u > hi):
            raise ValueError(f"u outside curve domain [{lo}, {hi}]")
        B = [basis_matrix(u, self.degree, self.knots, k) for k in range(order + 1)]
        P = self.control_points
        if self.weights is None:
            return [b @ P for b in B]
        w = self.weights
        A = [b @ (P * w[:, None]) for b in B]
        W = [(b @ w)[:, None] for b in B]
        C = A[0] / W[0]
        out = [C]
        if order >= 1:
            C1 = (A[1] - W[1] * C) / W[0]
            out.append(C1)
        if order >= 2:
            out.append((A[2] - 2.0 * W[1] * C1 - W[2] * C) / W[0])
        return out

    def evaluate(self, u) -> np.ndarray:
        return self.derivatives(u, 0)[0]

    def tangent(self, u) -> np.ndarray:
        return self.derivatives(u, 1)[1]

    def second_derivative(self, u) -> np.ndarray:
        return self.derivatives(u, 2)[2]

    def transformed(self, R=np.eye(3), t=np.zeros(3), scale: float = 1.0) -> "BSplineCurve":
        P = scale * self.control_points @ np.asarray(R, dtype=float).T + np.asarray(t, dtype=float)
        return BSplineCurve(self.degree, self.knots, P, self.weights)


def bspline_eval(curve: BSplineCurve, u: float) -> np.ndarray:
    return curve.evaluate(u)[0]


def bspline_tangent(curve: BSplineCurve, u: float) -> np.ndarray:
    return curve.tangent(u)[0]
