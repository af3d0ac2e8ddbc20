"""Sampled scalar fields on axis-aligned boxes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import mesh as _mesh
from .implicit import ImplicitSolid

CHUNK = 1 << 18


@dataclass(frozen=True)
class ScalarGrid:
    """Field values at the corner lattice of ``bbox``.

    ``values`` is stored as an (nx, ny, nz) array; :meth:`flat` gives the
    x-fastest sequence.
    """

    bbox: tuple
    values: np.ndarray

    def __post_init__(self):
        lo, hi = (np.asarray(b, dtype=float).reshape(3) for b in self.bbox)
        if not np.all(hi > lo):
            raise ValueError("bbox needs positive extent on every axis")
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 3 or min(v.shape) < 2:
            raise ValueError("values must be (nx, ny, nz) with every dim >= 2")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid values must be finite")
        object.__setattr__(self, "bbox", (tuple(lo.tolist()), tuple(hi.tolist())))
        object.__setattr__(self, "values", v)

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(int(n) for n in self.values.shape)

    @property
    def origin(self) -> np.ndarray:
        return np.asarray(self.bbox[0])

    @property
    def spacing(self) -> np.ndarray:
        lo, hi = (np.asarray(b) for b in self.bbox)
        return (hi - lo) / (np.asarray(self.dims) - 1)

    def axes(self) -> list[np.ndarray]:
        return grid_axes(self.bbox, self.dims)

    def flat(self) -> np.ndarray:
        return self.values.ravel(order="F")

    @classmethod
    def from_flat(cls, bbox, dims, flat) -> "ScalarGrid":
        flat = np.asarray(flat, dtype=float)
        if flat.size != int(np.prod(dims)):
            raise ValueError("value count does not match dims")
        return cls(bbox, flat.reshape(tuple(dims), order="F"))


def grid_axes(bbox, dims) -> list[np.ndarray]:
    lo, hi = (np.asarray(b, dtype=float) for b in bbox)
    return [np.linspace(lo[k], hi[k], int(dims[k])) for k in range(3)]


def grid_points(bbox, dims) -> np.ndarray:
    """Lattice points in (i, j, k) C order, shape (nx*ny*nz, 3)."""
    X, Y, Z = np.meshgrid(*grid_axes(bbox, dims), indexing="ij")
    return np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)


def evaluate_on_grid(fn, bbox, dims, components: int | None = None,
                     check_finite: bool = True) -> np.ndarray:
    """Evaluate a vectorised field on the lattice in x-slabs.

    Returns (nx, ny, nz), or (nx, ny, nz, components) when ``fn`` yields
    that many values per point.
    """
    dims = tuple(int(d) for d in dims)
    if min(dims) < 2:
        raise ValueError("every grid dimension must be at least 2")
    ax = grid_axes(bbox, dims)
    nyz = dims[1] * dims[2]
    Y, Z = np.meshgrid(ax[1], ax[2], indexing="ij")
    yz = np.stack([Y.ravel(), Z.ravel()], axis=1)
    tail = () if components is None else (components,)
    out = np.empty(dims + tail)
    step = max(1, CHUNK // nyz)
    for i0 in range(0, dims[0], step):
        xs = ax[0][i0:i0 + step]
        pts = np.empty((len(xs) * nyz, 3))
        pts[:, 0] = np.repeat(xs, nyz)
        pts[:, 1:] = np.tile(yz, (len(xs), 1))
        vals = np.asarray(fn(pts), dtype=float)
        out[i0:i0 + len(xs)] = vals.reshape((len(xs),) + dims[1:] + tail)
    if check_finite and not np.all(np.isfinite(out)):
        raise ValueError("field evaluation produced non-finite values")
    return out


def sample_grid(solid: ImplicitSolid, bbox, dims) -> ScalarGrid:
    return ScalarGrid(bbox, evaluate_on_grid(solid, bbox, dims))


def volume_fraction(grid: ScalarGrid, iso: float = 0.0) -> float:
    """Share of lattice points with value >= iso."""
    return float(np.count_nonzero(grid.values >= iso)) / grid.values.size


def marching_cubes(grid: ScalarGrid, iso: float = 0.0, close_boundary: bool = False) -> _mesh.TriMesh:
    """Isosurface of ``grid`` with normals pointing away from ``value >= iso``.

    Returns an empty mesh when ``iso`` is not crossed.  ``close_boundary``
    caps the surface where the solid meets the grid boundary.
    """
    return _mesh.marching_cubes(grid.values, grid.spacing, grid.origin, iso, close_boundary)
