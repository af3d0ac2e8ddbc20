"""Centerline CSV and swept-tube STL for a route."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..mesh import TriMesh, write_stl
from .losses import curvature_profile
from .routes import Route

CENTERLINE_HEADER = ("s_m", "x_m", "y_m", "z_m", "kappa_per_m")


def _tube_centerline(route: Route, per_span: int = 32) -> np.ndarray:
    c = route.curve
    us = []
    for lo, hi in c.spans():
        n = 1 if c.degree == 1 else per_span
        us.append(np.linspace(lo, hi, n + 1)[:-1])
    us.append([c.domain[1]])
    pts = c.evaluate(np.concatenate(us))
    keep = np.concatenate([[True], np.linalg.norm(np.diff(pts, axis=0), axis=1) > 1e-12])
    return pts[keep]


def _perpendicular(t):
    a = np.array([1.0, 0.0, 0.0]) if abs(t[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = a - np.dot(a, t) * t
    return u / np.linalg.norm(u)


def tube_mesh(route: Route, segments: int = 64, per_span: int = 32) -> TriMesh:
    """Closed circular tube of the route's diameter around its centerline.

    Cross-section frames are propagated by double reflection (rotation
    minimizing); at corners the ring lies in the bisecting plane and is
    stretched along the bend so the tube walls meet as a miter.
    """
    pts = _tube_centerline(route, per_span)
    r = 0.5 * route.diameter
    seg = np.diff(pts, axis=0)
    seg /= np.linalg.norm(seg, axis=1)[:, None]
    n = len(pts)
    tang = np.empty_like(pts)
    tang[0], tang[-1] = seg[0], seg[-1]
    for i in range(1, n - 1):
        t = seg[i - 1] + seg[i]
        tang[i] = t / np.linalg.norm(t)
    frames = [_perpendicular(tang[0])]
    for i in range(n - 1):
        v1 = pts[i + 1] - pts[i]
        c1 = np.dot(v1, v1)
        rL = frames[-1] - 2.0 / c1 * np.dot(v1, frames[-1]) * v1
        tL = tang[i] - 2.0 / c1 * np.dot(v1, tang[i]) * v1
        v2 = tang[i + 1] - tL
        c2 = np.dot(v2, v2)
        rn = rL if c2 < 1e-30 else rL - 2.0 / c2 * np.dot(v2, rL) * v2
        rn -= np.dot(rn, tang[i + 1]) * tang[i + 1]
        frames.append(rn / np.linalg.norm(rn))
    ang = 2.0 * np.pi * np.arange(segments) / segments
    cs, sn = np.cos(ang), np.sin(ang)
    rings = np.empty((n, segments, 3))
    for i in range(n):
        e1 = frames[i]
        e2 = np.cross(tang[i], e1)
        ring = cs[:, None] * e1 + sn[:, None] * e2
        if 0 < i < n - 1:
            bend = seg[i] - seg[i - 1]
            bn = np.linalg.norm(bend)
            if bn > 1e-12:
                bhat = bend / bn
                cos_half = float(np.dot(tang[i], seg[i - 1]))
                ring = ring + (1.0 / cos_half - 1.0) * (ring @ bhat)[:, None] * bhat
        rings[i] = pts[i] + r * ring
    verts = np.concatenate([rings.reshape(-1, 3), pts[[0, -1]]])
    faces = []
    j = np.arange(segments)
    jn = (j + 1) % segments
    for i in range(n - 1):
        a0, a1 = i * segments + j, i * segments + jn
        b0, b1 = (i + 1) * segments + j, (i + 1) * segments + jn
        faces.append(np.stack([a0, a1, b1], axis=1))
        faces.append(np.stack([a0, b1, b0], axis=1))
    c0, c1 = n * segments, n * segments + 1
    faces.append(np.stack([np.full(segments, c0), jn, j], axis=1))
    last = (n - 1) * segments
    faces.append(np.stack([np.full(segments, c1), last + j, last + jn], axis=1))
    mesh = TriMesh(verts, np.concatenate(faces))
    if mesh.volume() < 0.0:
        mesh = mesh.flipped()
    return mesh


def write_centerline_csv(route: Route, path, n_samples: int = 256) -> None:
    prof = curvature_profile(route, n_samples)
    pts = route.curve.evaluate(prof.u)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CENTERLINE_HEADER)
        for s, p, k in zip(prof.s, pts, prof.kappa):
            w.writerow([repr(float(s)), *(repr(float(x)) for x in p), repr(float(k))])


def export_route(route: Route, path, segments: int = 64) -> dict:
    """Write ``<path>.csv`` (centerline) and ``<path>.stl`` (tube); return both paths."""
    stem = Path(path)
    if stem.suffix in (".csv", ".stl"):
        stem = stem.with_suffix("")
    csv_path, stl_path = stem.with_suffix(".csv"), stem.with_suffix(".stl")
    write_centerline_csv(route, csv_path)
    write_stl(tube_mesh(route, segments), stl_path)
    return {"csv": csv_path, "stl": stl_path}
