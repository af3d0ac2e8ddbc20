"""Triangle meshes: isosurface extraction, measures, binary STL I/O."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from skimage import measure

STL_HEADER = b"ehankle binary STL"


@dataclass(frozen=True)
class TriMesh:
    vertices: np.ndarray  # (V, 3) float64
    faces: np.ndarray     # (F, 3) int64, counter-clockwise seen from outside

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float).reshape(-1, 3)
        f = np.ascontiguousarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise ValueError("face index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def triangles(self) -> np.ndarray:
        return self.vertices[self.faces]

    def face_normals(self) -> np.ndarray:
        tri = self.triangles()
        n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        norm = np.linalg.norm(n, axis=1, keepdims=True)
        return np.divide(n, norm, out=np.zeros_like(n), where=norm > 0)

    def area(self) -> float:
        tri = self.triangles()
        return float(0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]),
                                          axis=1).sum())

    def volume(self) -> float:
        """Signed enclosed volume; positive for outward-facing orientation."""
        tri = self.triangles()
        return float(np.einsum("ij,ij->i", tri[:, 0], np.cross(tri[:, 1], tri[:, 2])).sum() / 6.0)

    def edge_counts(self) -> np.ndarray:
        f = self.faces
        e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        e.sort(axis=1)
        _, counts = np.unique(e, axis=0, return_counts=True)
        return counts

    def is_watertight(self) -> bool:
        """Every undirected edge is shared by exactly two triangles."""
        if self.n_faces == 0:
            return False
        return bool(np.all(self.edge_counts() == 2))

    def weld(self, tol: float = 1e-9) -> "TriMesh":
        """Merge vertices closer than ``tol`` (grid snap) and drop degenerate faces."""
        key = np.round(self.vertices / tol).astype(np.int64)
        _, first, inverse = np.unique(key, axis=0, return_index=True, return_inverse=True)
        order = np.argsort(first)
        remap = np.empty_like(order)
        remap[order] = np.arange(len(order))
        verts = self.vertices[first[order]]
        faces = remap[inverse.reshape(-1)][self.faces]
        keep = (faces[:, 0] != faces[:, 1]) & (faces[:, 1] != faces[:, 2]) & (faces[:, 0] != faces[:, 2])
        return TriMesh(verts, faces[keep])

    def flipped(self) -> "TriMesh":
        return TriMesh(self.vertices, self.faces[:, ::-1])

    @staticmethod
    def concatenate(meshes) -> "TriMesh":
        verts, faces, off = [], [], 0
        for m in meshes:
            verts.append(m.vertices)
            faces.append(m.faces + off)
            off += len(m.vertices)
        if not verts:
            return TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
        return TriMesh(np.concatenate(verts), np.concatenate(faces))


def marching_cubes(values: np.ndarray, spacing=(1.0, 1.0, 1.0), origin=(0.0, 0.0, 0.0),
                   level: float = 0.0, close_boundary: bool = True) -> TriMesh:
    """Isosurface ``values == level`` of a sampled field, solid where ``values > level``.

    ``values`` has shape (nx, ny, nz) with sample (i, j, k) at
    ``origin + (i, j, k) * spacing``.  With ``close_boundary`` the field is
    padded by one layer of empty cells so solids touching the grid boundary
    still yield a closed surface; the caps are then pressed flat onto the
    grid faces.  A level that the field never crosses gives
    an empty mesh.
    """
    vol = np.asarray(values, dtype=float)
    if vol.ndim != 3 or min(vol.shape) < 2:
        raise ValueError("values must be a 3-D array with at least 2 samples per axis")
    if not np.all(np.isfinite(vol)):
        raise ValueError("values must be finite")
    spacing = np.asarray(spacing, dtype=float)
    origin = np.asarray(origin, dtype=float)
    box = (origin.copy(), origin + (np.asarray(vol.shape) - 1) * spacing)
    if close_boundary:
        lo = min(float(vol.min()), level) - 1.0
        vol = np.pad(vol, 1, mode="constant", constant_values=lo)
        origin = origin - spacing
    if not (vol.min() < level < vol.max()):
        return TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    verts, faces, _, _ = measure.marching_cubes(vol, level=level, spacing=tuple(spacing),
                                                method="lorensen", allow_degenerate=False)
    verts = verts.astype(float) + origin
    if close_boundary:
        # cap vertices sit on edges into the padding; move them onto the faces
        verts = np.clip(verts, box[0], box[1])
    mesh = TriMesh(verts, faces.astype(np.int64)).weld(1e-9)
    if mesh.volume() < 0.0:
        mesh = mesh.flipped()
    return mesh


def write_stl(mesh: TriMesh, path, header: bytes = STL_HEADER) -> None:
    """Binary STL; output depends only on the mesh, so repeated writes are identical."""
    tri = mesh.triangles().astype(np.float32)
    normals = mesh.face_normals().astype(np.float32)
    rec = np.zeros(len(tri), dtype=[("n", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")])
    rec["n"] = normals
    rec["v"] = tri
    with Path(path).open("wb") as fh:
        fh.write(header[:80].ljust(80, b"\0"))
        fh.write(struct.pack("<I", len(tri)))
        fh.write(rec.tobytes())


def read_stl(path, weld_tol: float = 1e-7) -> TriMesh:
    data = Path(path).read_bytes()
    if len(data) < 84:
        raise ValueError("file too short for binary STL")
    (n,) = struct.unpack_from("<I", data, 80)
    dtype = np.dtype([("n", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")])
    if len(data) != 84 + n * dtype.itemsize:
        raise ValueError("binary STL size does not match its triangle count")
    rec = np.frombuffer(data, dtype=dtype, count=n, offset=84)
    verts = rec["v"].reshape(-1, 3).astype(float)
    faces = np.arange(3 * n, dtype=np.int64).reshape(-1, 3)
    return TriMesh(verts, faces).weld(weld_tol)
