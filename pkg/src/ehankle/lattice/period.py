"""Spatially varying lattice frequency t(r) in cells per metre.

t(r) = sum_i w_i psi(|r - p_i| / support) + Q(r), floored at t_min, with
psi the Wendland C2 kernel and Q affine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_DENSE_LIMIT = 1 << 22


def wendland_c2(d):
    d = np.asarray(d, dtype=float)
    c = np.maximum(1.0 - d, 0.0)
    c *= c
    c *= c
    return c * (4.0 * d + 1.0)


@dataclass(frozen=True)
class PeriodField:
    centers: np.ndarray        # (k, 3) m
    weights: np.ndarray        # (k,) 1/m
    support_radius: float      # m
    poly: np.ndarray           # (c0, cx, cy, cz): 1/m and 1/m per m
    t_min: float               # 1/m

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=float).reshape(-1, 3)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        q = np.asarray(self.poly, dtype=float).reshape(4)
        if len(c) != len(w):
            raise ValueError("one weight per centre is required")
        if not self.support_radius > 0.0:
            raise ValueError("support radius must be positive")
        if not self.t_min > 0.0:
            raise ValueError("t_min must be positive")
        for a in (c, w, q):
            a.setflags(write=False)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "poly", q)
        object.__setattr__(self, "_c2", (c * c).sum(axis=1))

    @classmethod
    def constant(cls, t: float, t_min: float | None = None) -> "PeriodField":
        return cls(np.zeros((0, 3)), np.zeros(0), 1.0, (t, 0.0, 0.0, 0.0),
                   t if t_min is None else t_min)

    def raw(self, pts) -> np.ndarray:
        """Unclamped RBF-plus-affine value."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = self.poly[0] + pts @ self.poly[1:]
        k = len(self.centers)
        if k == 0:
            return out
        step = max(1, _DENSE_LIMIT // k)
        for s in range(0, len(pts), step):
            p = pts[s:s + step]
            d2 = ((p * p).sum(axis=1)[:, None] + self._c2[None, :]) - 2.0 * (p @ self.centers.T)
            d = np.sqrt(np.maximum(d2, 0.0))
            d *= 1.0 / self.support_radius
            out[s:s + step] += wendland_c2(d) @ self.weights
        return out

    def __call__(self, pts) -> np.ndarray:
        return np.maximum(self.raw(pts), self.t_min)

    def to_dict(self) -> dict:
        return {"centers": self.centers.tolist(), "weights": self.weights.tolist(),
                "support_radius": self.support_radius, "poly": self.poly.tolist(),
                "t_min": self.t_min}


def eval_period_field(t: PeriodField, r) -> np.ndarray | float:
    out = t(r)
    return float(out[0]) if np.asarray(r).ndim == 1 else out


def fit_period_field(points, values, support: float, t_min: float,
                     cond_limit: float = 1e12) -> PeriodField:
    """Interpolate ``values`` at ``points`` with kernels plus an affine term.

    The kernel weights are orthogonal to affine functions, so affine data
    is carried entirely by the polynomial.  Coordinates are centred and
    scaled before solving.
    """
    P = np.asarray(points, dtype=float).reshape(-1, 3)
    v = np.asarray(values, dtype=float).reshape(-1)
    if len(P) != len(v):
        raise ValueError("one value per sample point is required")
    if len(P) < 4:
        raise ValueError("need at least four samples")
    if not support > 0.0:
        raise ValueError("support must be positive")
    shift = P.mean(axis=0)
    scale = float(np.abs(P - shift).max()) or 1.0
    X = (P - shift) / scale
    if len(np.unique(np.round(X, 12), axis=0)) < len(X):
        raise np.linalg.LinAlgError("duplicate sample points")
    poly = np.hstack([np.ones((len(X), 1)), X])
    if np.linalg.matrix_rank(poly, tol=1e-9) < 4:
        raise np.linalg.LinAlgError("sample points are coplanar; affine term is undetermined")
    d = np.linalg.norm(P[:, None, :] - P[None, :, :], axis=2)
    Phi = wendland_c2(d / support)
    n = len(P)
    A = np.zeros((n + 4, n + 4))
    A[:n, :n] = Phi
    A[:n, n:] = poly
    A[n:, :n] = poly.T
    if np.linalg.cond(A) > cond_limit:
        raise np.linalg.LinAlgError("interpolation system is singular or ill-conditioned")
    sol = np.linalg.solve(A, np.concatenate([v, np.zeros(4)]))
    w, c = sol[:n], sol[n:]
    lin = c[1:] / scale
    c0 = c[0] - shift @ lin
    return PeriodField(P, w, support, np.concatenate([[c0], lin]), t_min)
