"""Primitive (P) surface sheet lattices with variable cell frequency."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import ScalarGrid, evaluate_on_grid
from .implicit import ImplicitSolid, boolean_intersect, boolean_union
from .period import PeriodField

MIN_WALL = 0.4e-3


class WallBelowFloorError(ValueError):
    pass


class DensityTargetError(ValueError):
    """The requested volume fraction cannot be met above the wall floor."""

    def __init__(self, msg, reachable=None):
        super().__init__(msg)
        self.reachable = reachable


def _freq(t, pts):
    if isinstance(t, PeriodField):
        return t(pts)
    return np.full(len(pts), float(t))


def phi_p(r, t) -> np.ndarray | float:
    """cos(2 pi x t) + cos(2 pi y t) + cos(2 pi z t), ``t`` in cells per metre."""
    r = np.asarray(r, dtype=float)
    pts = np.atleast_2d(r)
    f = 2.0 * math.pi * _freq(t, pts)
    out = np.cos(f * pts[:, 0]) + np.cos(f * pts[:, 1]) + np.cos(f * pts[:, 2])
    return float(out[0]) if r.ndim == 1 else out


class SheetSolid(ImplicitSolid):
    """Sheet of thickness ``w`` centred on the surface phi_P = 0.

    Distance to the mid-surface is approximated to first order by
    |phi| / |grad phi| with a central-difference gradient, so the solid is
    ``w/2 - |phi| / |grad phi| >= 0``.
    """

    def __init__(self, t, w: float, h: float = 1e-6):
        self.t = t
        self.w = float(w)
        self.h = float(h)
        super().__init__(lambda p: 0.5 * self.w - self.sheet_distance(p), f"P-sheet(w={w:g})")

    def sheet_distance(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        phi = phi_p(pts, self.t)
        grad = np.empty_like(pts)
        for k in range(3):
            dp = np.zeros(3)
            dp[k] = self.h
            grad[:, k] = (phi_p(pts + dp, self.t) - phi_p(pts - dp, self.t)) / (2.0 * self.h)
        g = np.linalg.norm(grad, axis=1)
        # |grad phi| vanishes only at isolated points far from the sheet
        floor = 1e-9 * 2.0 * math.pi * np.max(_freq(self.t, pts))
        return np.abs(phi) / np.maximum(g, floor)


def thicken_tpms(t, w: float, allow_below_floor: bool = False, floor: float = MIN_WALL) -> SheetSolid:
    if w < floor and not allow_below_floor:
        raise WallBelowFloorError(f"wall {w * 1e3:.3f} mm is below the {floor * 1e3:.2f} mm floor")
    if w < 0.0:
        raise ValueError("wall thickness cannot be negative")
    return SheetSolid(t, w)


def fill_region(design: ImplicitSolid, keep: ImplicitSolid, t, w: float, **kw) -> ImplicitSolid:
    """Kept solid plus lattice inside the design region."""
    return boolean_union(keep, boolean_intersect(design, thicken_tpms(t, w, **kw)))


@dataclass
class DensitySolution:
    w: float
    fraction: float
    target: float
    iterations: int
    grid: ScalarGrid

    def report(self) -> dict:
        return {"w_m": self.w, "fraction": self.fraction, "target": self.target,
                "iterations": self.iterations, "dims": list(self.grid.dims),
                "bbox": [list(self.grid.bbox[0]), list(self.grid.bbox[1])]}


def solve_thickness_for_density(t, target: float, bbox, dims, design: ImplicitSolid | None = None,
                                keep: ImplicitSolid | None = None, void: ImplicitSolid | None = None,
                                floor: float = MIN_WALL, tol: float = 1e-3,
                                max_iter: int = 80) -> DensitySolution:
    """Bisect on sheet thickness until the voxel volume fraction of

        ((design & sheet(w)) | keep) - void

    over ``bbox`` is within ``tol`` of ``target``.  Fields are sampled once;
    each bisection step only re-thresholds.
    """
    if not 0.0 < target <= 1.0:
        raise ValueError("target fraction must lie in (0, 1]")
    sheet = SheetSolid(t, 0.0)

    def fields(p):
        cols = [sheet.sheet_distance(p)]
        cols.append(design(p) if design is not None else np.full(len(p), np.inf))
        cols.append(keep(p) if keep is not None else np.full(len(p), -np.inf))
        cols.append(void(p) if void is not None else np.full(len(p), -np.inf))
        return np.stack(cols, axis=-1)

    dims = tuple(int(d) for d in dims)
    stacked = evaluate_on_grid(fields, bbox, dims, components=4, check_finite=False)
    dist, des, kp, vd = (stacked[..., i] for i in range(4))

    def values(w):
        v = np.maximum(np.minimum(des, 0.5 * w - dist), kp)
        return np.minimum(v, -vd)

    def frac(w):
        return float(np.count_nonzero(values(w) >= 0.0)) / dist.size

    f_lo = frac(floor)
    if f_lo > target + tol:
        raise DensityTargetError(
            f"target {target:.4f} unreachable: the {floor * 1e3:.2f} mm wall floor already "
            f"gives {f_lo:.4f}", reachable=(f_lo, None))
    w_lo, w_hi = floor, 2.0 * floor
    f_hi = frac(w_hi)
    # a wall four cell widths thick fills every cell
    cap = 4.0 / (t.t_min if isinstance(t, PeriodField) else float(t))
    it = 0
    while f_hi < target - tol:
        if w_hi > cap:
            raise DensityTargetError(
                f"target {target:.4f} unreachable: fraction saturates at {f_hi:.4f}",
                reachable=(f_lo, f_hi))
        w_lo, w_hi = w_hi, 2.0 * w_hi
        f_hi = frac(w_hi)
        it += 1
    w, f = (w_lo, f_lo) if abs(f_lo - target) <= tol else (w_hi, f_hi)
    while abs(f - target) > tol and it < max_iter and w_hi - w_lo > 1e-12:
        w = 0.5 * (w_lo + w_hi)
        f = frac(w)
        if f < target:
            w_lo = w
        else:
            w_hi = w
        it += 1
    if abs(f - target) > tol:
        raise DensityTargetError(f"bisection stalled at fraction {f:.4f} (w={w:.4g} m)",
                                 reachable=(f_lo, f_hi))
    grid = ScalarGrid(bbox, _finite(values(w)))
    return DensitySolution(w, f, target, it, grid)


def _finite(v):
    # infinite entries only mark "no constraint"; the sign is what matters
    return np.clip(v, -1.0, 1.0)
