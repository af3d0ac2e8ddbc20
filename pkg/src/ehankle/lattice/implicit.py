"""Implicit solids (value >= 0 is material) and their min/max booleans."""

from __future__ import annotations

from typing import Callable

import numpy as np


class ImplicitSolid:
    """Wraps a vectorised field ``f(points (N, 3)) -> (N,)``."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], name: str = "solid"):
        self._fn = fn
        self.name = name

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        single = pts.ndim == 1
        out = np.asarray(self._fn(np.atleast_2d(pts)), dtype=float)
        return out[0] if single else out

    def contains(self, pts) -> np.ndarray:
        return self(pts) >= 0.0

    def __repr__(self):
        return f"ImplicitSolid({self.name})"


def boolean_intersect(a: ImplicitSolid, b: ImplicitSolid) -> ImplicitSolid:
    return ImplicitSolid(lambda p: np.minimum(a(p), b(p)), f"({a.name} & {b.name})")


def boolean_union(a: ImplicitSolid, b: ImplicitSolid) -> ImplicitSolid:
    return ImplicitSolid(lambda p: np.maximum(a(p), b(p)), f"({a.name} | {b.name})")


def boolean_subtract(a: ImplicitSolid, b: ImplicitSolid) -> ImplicitSolid:
    return ImplicitSolid(lambda p: np.minimum(a(p), -b(p)), f"({a.name} - {b.name})")


def complement(a: ImplicitSolid) -> ImplicitSolid:
    return ImplicitSolid(lambda p: -a(p), f"~{a.name}")


def constant_solid(value: float) -> ImplicitSolid:
    return ImplicitSolid(lambda p: np.full(len(p), float(value)), f"const({value})")


EVERYWHERE = constant_solid(1.0)
NOWHERE = constant_solid(-1.0)


def sphere_solid(center, radius: float) -> ImplicitSolid:
    c = np.asarray(center, dtype=float)
    return ImplicitSolid(lambda p: radius - np.linalg.norm(p - c, axis=1), "sphere")


def box_solid(lo, hi) -> ImplicitSolid:
    """Axis-aligned box; value is the distance to the nearest face inside
    (positive) and minus the largest face excess outside."""
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    return ImplicitSolid(lambda p: np.minimum(p - lo, hi - p).min(axis=1), "box")


def shell_solid(lo, hi, thickness: float) -> ImplicitSolid:
    """Hollow box: the outer skin of ``thickness`` inside the box."""
    outer = box_solid(lo, hi)
    inner = box_solid(np.asarray(lo, float) + thickness, np.asarray(hi, float) - thickness)
    return boolean_subtract(outer, inner)
