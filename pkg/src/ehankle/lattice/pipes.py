"""Distance to channel centerlines and the pipe-wall solid around them."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from ..channels.bspline import BSplineCurve
from .implicit import ImplicitSolid

_CHUNK = 1 << 17


class CenterlineSet:
    """Nearest-point queries against a fixed set of curves."""

    def __init__(self, curves, per_span: int = 128, refine_within: float = np.inf):
        curves = list(curves)
        if not curves:
            raise ValueError("at least one centerline is required")
        self.curves = curves
        self.samples = []
        for c in curves:
            us = [np.linspace(lo, hi, per_span + 1)[:-1] for lo, hi in c.spans()]
            u = np.concatenate(us + [[c.domain[1]]])
            self.samples.append((u, c.evaluate(u)))
        self.trees = [cKDTree(p) for _, p in self.samples]
        self.refine_within = float(refine_within)
        self._last = None

    def _curve_distance(self, idx: int, pts: np.ndarray, newton: int = 3) -> np.ndarray:
        curve: BSplineCurve = self.curves[idx]
        u_s, p_s = self.samples[idx]
        _, j = self.trees[idx].query(pts)
        # project onto the two sampled segments touching the nearest sample
        best_d = np.full(len(pts), np.inf)
        best_u = u_s[j].copy()
        for off in (-1, 0):
            j0 = np.clip(j + off, 0, len(p_s) - 2)
            a, b = p_s[j0], p_s[j0 + 1]
            seg = b - a
            ll = np.einsum("ij,ij->i", seg, seg)
            s = np.clip(np.einsum("ij,ij->i", pts - a, seg) / np.where(ll > 0, ll, 1.0), 0.0, 1.0)
            d = np.linalg.norm(pts - (a + s[:, None] * seg), axis=1)
            better = d < best_d
            best_d[better] = d[better]
            best_u[better] = (u_s[j0] + s * (u_s[j0 + 1] - u_s[j0]))[better]
        # polyline distance is already within the chord sagitta; polish
        # only the points close enough to matter
        near = np.nonzero(best_d <= self.refine_within)[0]
        if len(near) == 0:
            return best_d
        pts, u = pts[near], best_u[near]
        lo, hi = curve.domain
        for _ in range(newton):
            C, d1, d2 = curve.derivatives(u, 2)
            r = C - pts
            f = np.einsum("ij,ij->i", r, d1)
            fp = np.einsum("ij,ij->i", d1, d1) + np.einsum("ij,ij->i", r, d2)
            ok = fp > 0.0
            u = np.where(ok, np.clip(u - np.where(ok, f / np.where(ok, fp, 1.0), 0.0), lo, hi), u)
        out = best_d.copy()
        out[near] = np.minimum(best_d[near], np.linalg.norm(curve.evaluate(u) - pts, axis=1))
        return out

    def distance(self, pts) -> np.ndarray:
        # wall and bore solids built on one set are usually evaluated on the
        # same chunk back to back; reuse the last answer for that array
        if self._last is not None and self._last[0] is pts:
            return self._last[1]
        result = self._distance(pts)
        self._last = (pts, result)
        return result

    def _distance(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.full(len(pts), np.inf)
        for s in range(0, len(pts), _CHUNK):
            p = pts[s:s + _CHUNK]
            for idx in range(len(self.curves)):
                out[s:s + _CHUNK] = np.minimum(out[s:s + _CHUNK], self._curve_distance(idx, p))
        return out


def distance_to_centerlines(r, curves) -> np.ndarray | float:
    """Minimum distance from each point to any of ``curves``."""
    r = np.asarray(r, dtype=float)
    d = CenterlineSet(curves).distance(r)
    return float(d[0]) if r.ndim == 1 else d


def _as_set(curves) -> CenterlineSet:
    return curves if isinstance(curves, CenterlineSet) else CenterlineSet(curves)


def pipe_wall_solid(curves, bore_radius: float, wall: float) -> ImplicitSolid:
    """Annular wall ``bore_radius <= d <= bore_radius + wall`` around the nearest centerline."""
    if not wall > 0.0:
        raise ValueError("wall must be positive")
    cs = _as_set(curves)
    outer = bore_radius + wall

    def f(p):
        d = cs.distance(p)
        return np.minimum(d - bore_radius, outer - d)

    return ImplicitSolid(f, "pipe_wall")


def bore_solid(curves, bore_radius: float) -> ImplicitSolid:
    """The open bore ``d <= bore_radius``."""
    cs = _as_set(curves)
    return ImplicitSolid(lambda p: bore_radius - cs.distance(p), "bore")
