"""2-D compliance topology optimisation: SIMP stiffness, density-weighted
sensitivity filter and optimality-criteria updates on a bilinear quad mesh.

Mesh conventions: unit square elements, ``nelx`` columns by ``nely`` rows,
row 0 at the top.  Node (ix, iy) has id ``ix * (nely + 1) + iy`` with dofs
``2 id`` (x, rightward) and ``2 id + 1`` (y, downward).  Densities are
(nely, nelx) arrays; element e = ``ix * nely + iy`` (column-major).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

E0 = 1.0
EMIN = 1e-9
NU = 0.3
RHO_MIN = 1e-3


class TopoError(RuntimeError):
    pass


def element_stiffness(nu: float = NU, E: float = 1.0) -> np.ndarray:
    """8x8 plane-stress stiffness of a unit square bilinear element, unit thickness."""
    k = np.array([1 / 2 - nu / 6, 1 / 8 + nu / 8, -1 / 4 - nu / 12, -1 / 8 + 3 * nu / 8,
                  -1 / 4 + nu / 12, -1 / 8 - nu / 8, nu / 6, 1 / 8 - 3 * nu / 8])
    idx = [[0, 1, 2, 3, 4, 5, 6, 7],
           [1, 0, 7, 6, 5, 4, 3, 2],
           [2, 7, 0, 5, 6, 3, 4, 1],
           [3, 6, 5, 0, 7, 2, 1, 4],
           [4, 5, 6, 7, 0, 1, 2, 3],
           [5, 4, 3, 2, 1, 0, 7, 6],
           [6, 3, 4, 1, 2, 7, 0, 5],
           [7, 2, 1, 4, 3, 6, 5, 0]]
    return E / (1 - nu ** 2) * k[np.array(idx)]


def node_id(ix: int, iy: int, nely: int) -> int:
    return ix * (nely + 1) + iy


@dataclass(frozen=True)
class TopoProblem:
    nelx: int
    nely: int
    volfrac: float = 0.5
    penalty: float = 3.0
    rmin: float = 1.5
    loads: tuple = ()          # (node, direction 0=x 1=y, N)
    fixed_dofs: tuple = ()     # (node, direction)
    passive_solid: frozenset = field(default_factory=frozenset)
    passive_void: frozenset = field(default_factory=frozenset)
    move: float = 0.2
    nu: float = NU

    def __post_init__(self):
        if self.nelx < 1 or self.nely < 1:
            raise ValueError("nelx and nely must be positive")
        if not 0.0 < self.volfrac <= 1.0:
            raise ValueError("volfrac must lie in (0, 1]")
        if self.penalty < 1.0:
            raise ValueError("penalty must be at least 1")
        if self.rmin < 1.0:
            raise ValueError("rmin must be at least 1 element")
        ps, pv = frozenset(self.passive_solid), frozenset(self.passive_void)
        if ps & pv:
            raise ValueError("passive solid and void sets overlap")
        n_el = self.nelx * self.nely
        if any(not 0 <= e < n_el for e in ps | pv):
            raise ValueError("passive element index out of range")
        n_nodes = (self.nelx + 1) * (self.nely + 1)
        for node, d, *_ in tuple(self.loads) + tuple(self.fixed_dofs):
            if not 0 <= node < n_nodes or d not in (0, 1):
                raise ValueError(f"bad node/direction ({node}, {d})")
        object.__setattr__(self, "passive_solid", ps)
        object.__setattr__(self, "passive_void", pv)

    @property
    def n_elements(self) -> int:
        return self.nelx * self.nely

    @property
    def n_dofs(self) -> int:
        return 2 * (self.nelx + 1) * (self.nely + 1)

    def load_vector(self) -> np.ndarray:
        f = np.zeros(self.n_dofs)
        for node, d, val in self.loads:
            f[2 * node + d] += val
        return f

    def fixed(self) -> np.ndarray:
        return np.unique([2 * n + d for n, d in self.fixed_dofs]).astype(int)

    def apply_passive(self, rho: np.ndarray) -> np.ndarray:
        flat = rho.ravel(order="F").copy()
        if self.passive_solid:
            flat[list(self.passive_solid)] = 1.0
        if self.passive_void:
            flat[list(self.passive_void)] = RHO_MIN
        return flat.reshape((self.nely, self.nelx), order="F")

    def with_(self, **kw) -> "TopoProblem":
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d.update(kw)
        return TopoProblem(**d)


class _FE:
    """Cached connectivity and stiffness for one mesh."""

    def __init__(self, prob: TopoProblem):
        self.prob = prob
        nelx, nely = prob.nelx, prob.nely
        self.KE = element_stiffness(prob.nu)
        ix, iy = np.meshgrid(np.arange(nelx), np.arange(nely), indexing="ij")
        n1 = (ix * (nely + 1) + iy).ravel()       # top-left
        n2 = ((ix + 1) * (nely + 1) + iy).ravel()  # top-right
        self.edof = np.stack([2 * n1 + 2, 2 * n1 + 3, 2 * n2 + 2, 2 * n2 + 3,
                              2 * n2, 2 * n2 + 1, 2 * n1, 2 * n1 + 1], axis=1)
        self.iK = np.kron(self.edof, np.ones((8, 1), dtype=int)).ravel()
        self.jK = np.kron(self.edof, np.ones((1, 8), dtype=int)).ravel()
        fixed = prob.fixed()
        self.free = np.setdiff1d(np.arange(prob.n_dofs), fixed)
        self.f = prob.load_vector()

    def solve(self, rho: np.ndarray) -> tuple[np.ndarray, float, np.ndarray]:
        p = self.prob.penalty
        x = rho.ravel(order="F")
        E = EMIN + x ** p * (E0 - EMIN)
        sK = (self.KE.ravel()[None, :] * E[:, None]).ravel()
        K = sp.coo_matrix((sK, (self.iK, self.jK)), shape=(self.prob.n_dofs,) * 2).tocsc()
        u = np.zeros(self.prob.n_dofs)
        ff = self.f[self.free]
        if np.any(ff != 0.0):
            Kf = K[self.free][:, self.free]
            Kf = 0.5 * (Kf + Kf.T)
            with np.errstate(all="raise"):
                try:
                    uf = spla.spsolve(Kf, ff)
                except (RuntimeError, FloatingPointError) as exc:
                    raise TopoError(f"stiffness matrix is singular: {exc}") from exc
            if not np.all(np.isfinite(uf)) or np.abs(uf).max() > 1e12:
                raise TopoError("stiffness matrix is singular (insufficient supports)")
            u[self.free] = uf
        ue = u[self.edof]
        ce = np.einsum("ij,jk,ik->i", ue, self.KE, ue)
        compliance = float(self.f @ u)
        return u, compliance, ce


def assemble_and_solve(problem: TopoProblem, rho) -> tuple[np.ndarray, float]:
    """Displacements and compliance f.u for densities ``rho`` (nely, nelx)."""
    rho = np.asarray(rho, dtype=float).reshape(problem.nely, problem.nelx)
    u, c, _ = _FE(problem).solve(rho)
    return u, c


def filter_matrix(nelx: int, nely: int, rmin: float) -> tuple[sp.csr_matrix, np.ndarray]:
    """Hat weights max(0, rmin - dist) between element centres; returns (H, row sums)."""
    r = int(math.ceil(rmin)) - 1
    rows, cols, vals = [], [], []
    for i in range(nelx):
        for j in range(nely):
            e1 = i * nely + j
            for k in range(max(i - r, 0), min(i + r + 1, nelx)):
                for m in range(max(j - r, 0), min(j + r + 1, nely)):
                    w = rmin - math.hypot(i - k, j - m)
                    if w > 0.0:
                        rows.append(e1)
                        cols.append(k * nely + m)
                        vals.append(w)
    n = nelx * nely
    H = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return H, np.asarray(H.sum(axis=1)).ravel()


def sensitivity_filter(rho, dc, rmin: float, _H=None) -> np.ndarray:
    """Density-weighted average of sensitivities over a cone of radius ``rmin``."""
    rho = np.asarray(rho, dtype=float)
    dc = np.asarray(dc, dtype=float)
    if rmin < 1.0:
        raise ValueError("rmin must be at least 1")
    nely, nelx = rho.shape
    H, Hs = _H if _H is not None else filter_matrix(nelx, nely, rmin)
    x = rho.ravel(order="F")
    out = (H @ (x * dc.ravel(order="F"))) / Hs / np.maximum(1e-3, x)
    return out.reshape((nely, nelx), order="F")


def oc_update(rho, dc, volfrac: float, move: float = 0.2, problem: TopoProblem | None = None,
              tol: float = 1e-6, max_bisect: int = 300) -> np.ndarray:
    """Optimality-criteria step with multiplier bisection on the volume constraint."""
    rho = np.asarray(rho, dtype=float)
    dc = np.asarray(dc, dtype=float)
    passive = problem.apply_passive if problem is not None else (lambda r: r)
    if move < 0.0:
        raise ValueError("move must be non-negative")
    if np.any(dc > 0.0):
        raise TopoError("positive compliance sensitivities are not physical")
    if move == 0.0:
        return passive(rho.copy())
    lo_b = np.maximum(RHO_MIN, rho - move)
    hi_b = np.minimum(1.0, rho + move)

    def update(lam):
        return passive(np.clip(rho * np.sqrt(-dc / lam), lo_b, hi_b))

    def mean(lam):
        return float(update(lam).mean())

    l1, l2 = 1e-30, 1.0
    while mean(l2) > volfrac:
        l2 *= 1e3
        if l2 > 1e300:
            raise TopoError("multiplier bisection failed to bracket the volume constraint")
    if mean(l1) < volfrac - tol:
        raise TopoError(f"volume {volfrac} unreachable within the move limit "
                        f"(max mean {mean(l1):.4f})")
    for _ in range(max_bisect):
        lm = math.sqrt(l1 * l2)
        m = mean(lm)
        if abs(m - volfrac) <= tol:
            return update(lm)
        if m > volfrac:
            l1 = lm
        else:
            l2 = lm
    new = update(math.sqrt(l1 * l2))
    if abs(new.mean() - volfrac) > 1e-4:
        raise TopoError("multiplier bisection did not meet the volume constraint")
    return new


@dataclass
class DensityField:
    rho: np.ndarray
    iterations: int
    compliance: list
    mean_density: list
    change: list
    converged: bool

    @property
    def final_compliance(self) -> float:
        return self.compliance[-1]


def run_topo(problem: TopoProblem, max_iters: int = 200, tol: float = 0.01,
             callback=None) -> DensityField:
    """Iterate solve, sensitivity, filter and OC until the largest density
    change drops below ``tol``.  ``compliance[k]`` is the compliance of the
    design entering iteration k; the last entry is the returned design."""
    fe = _FE(problem)
    Hf = filter_matrix(problem.nelx, problem.nely, problem.rmin)
    rho = problem.apply_passive(np.full((problem.nely, problem.nelx), problem.volfrac))
    hist_c, hist_m, hist_ch = [], [], []
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        _, c, ce = fe.solve(rho)
        x = rho.ravel(order="F")
        dc = (-problem.penalty * x ** (problem.penalty - 1) * (E0 - EMIN) * ce)
        dc = dc.reshape((problem.nely, problem.nelx), order="F")
        dc = np.minimum(sensitivity_filter(rho, dc, problem.rmin, Hf), 0.0)
        new = oc_update(rho, dc, problem.volfrac, problem.move, problem)
        change = float(np.abs(new - rho).max())
        hist_c.append(c)
        hist_m.append(float(rho.mean()))
        hist_ch.append(change)
        rho = new
        if callback:
            callback(it, c, change)
        if change < tol:
            converged = True
            break
    _, c, _ = fe.solve(rho)
    hist_c.append(c)
    hist_m.append(float(rho.mean()))
    hist_ch.append(0.0)
    return DensityField(rho, it, hist_c, hist_m, hist_ch, converged)


# -- presets ----------------------------------------------------------------

def cantilever(nelx: int = 60, nely: int = 20, volfrac: float = 0.5, penalty: float = 3.0,
               rmin: float = 1.5, load: float = 1.0) -> TopoProblem:
    """Left edge clamped, downward point load at mid-height of the right edge."""
    fixed = tuple((node_id(0, j, nely), d) for j in range(nely + 1) for d in (0, 1))
    loads = ((node_id(nelx, nely // 2, nely), 1, load),)
    return TopoProblem(nelx, nely, volfrac, penalty, rmin, loads, fixed)


def bracket(nelx: int = 60, nely: int = 40, volfrac: float = 0.4, penalty: float = 3.0,
            rmin: float = 1.5, load: float = 1.0, angle_deg: float = 60.0) -> TopoProblem:
    """Footplate-style bracket: bottom edge clamped, oblique load at a pin
    near the upper right, and a solid disc of elements around the pin that
    the optimiser may not remove."""
    fixed = tuple((node_id(i, nely, nely), d) for i in range(nelx + 1) for d in (0, 1))
    px, py = int(round(0.75 * nelx)), int(round(0.25 * nely))
    a = math.radians(angle_deg)
    pin = node_id(px, py, nely)
    loads = ((pin, 0, load * math.cos(a)), (pin, 1, load * math.sin(a)))
    ring = max(2.0, 0.08 * min(nelx, nely))
    solid = frozenset(ix * nely + iy for ix in range(nelx) for iy in range(nely)
                      if math.hypot(ix + 0.5 - px, iy + 0.5 - py) <= ring)
    return TopoProblem(nelx, nely, volfrac, penalty, rmin, loads, fixed, passive_solid=solid)


PRESETS = {"cantilever": cantilever, "bracket": bracket}


# -- export -----------------------------------------------------------------

def write_density_csv(rho, path) -> None:
    rho = np.asarray(rho, dtype=float)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in rho:
            w.writerow([repr(float(v)) for v in row])


def read_density_csv(path) -> np.ndarray:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return np.array([[float(v) for v in row] for row in csv.reader(fh)])


def write_history_csv(field_: DensityField, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("iteration", "compliance", "mean_density", "change"))
        for k, (c, m, ch) in enumerate(zip(field_.compliance, field_.mean_density, field_.change)):
            w.writerow((k, repr(c), repr(m), repr(ch)))


def write_density_png(rho, path, scale: int = 4) -> None:
    """Grayscale image, one ``scale`` x ``scale`` block per element, black = solid."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    img = 1.0 - np.clip(np.asarray(rho, dtype=float), 0.0, 1.0)
    img = np.kron(img, np.ones((scale, scale)))
    plt.imsave(path, img, cmap="gray", vmin=0.0, vmax=1.0, format="png",
               metadata={"Software": None})


def export_density_png_csv(field_: DensityField, path) -> dict:
    """Write ``<path>.csv``, ``<path>.png`` and ``<path>_history.csv``."""
    stem = Path(path)
    if stem.suffix in (".csv", ".png"):
        stem = stem.with_suffix("")
    if field_.rho.size == 0:
        raise ValueError("empty density field")
    out = {"csv": stem.with_suffix(".csv"), "png": stem.with_suffix(".png"),
           "history": stem.with_name(stem.name + "_history.csv")}
    write_density_csv(field_.rho, out["csv"])
    write_density_png(field_.rho, out["png"])
    write_history_csv(field_, out["history"])
    return out
