"""Quality triangulation of a contour's interior.

Meshing is delegated to Shewchuk's Triangle (``triangle`` package): a
constrained Delaunay triangulation with Ruppert refinement to a 20 degree
minimum angle, with Steiner points forbidden on the boundary so that the
contour samples are exactly the boundary vertices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import triangle

from .contour import Contour
from .errors import DegenerateGeometry, InvalidArgument, MeshQualityFailure

MIN_ANGLE_DEG = 20.0
# Triangle's area bound is a ceiling; twice the equilateral area gives a
# median interior edge close to h.
_AREA_FACTOR = np.sqrt(3.0) / 2.0
# coordinates handed to Triangle are snapped to this grid so that tiny
# perturbations (e.g. a rigid shift of the contour) give identical connectivity
_SNAP = 2.0**-36


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Conforming P1 triangulation of a polygon interior.

    Attributes
    ----------
    vertices : (V, 2) array
    triangles : (T, 3) int array, counter-clockwise
    boundary_map : (N,) int array
        ``boundary_map[i]`` is the vertex index of contour sample ``i``.
    h : float
        Target interior edge length.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_map: np.ndarray
    h: float
    cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for name in ("vertices", "triangles", "boundary_map"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def corners(self) -> np.ndarray:
        """(T, 3, 2) vertex coordinates of each triangle."""
        return self.vertices[self.triangles]

    @cached_property
    def signed_areas(self) -> np.ndarray:
        p = self.corners
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @property
    def areas(self) -> np.ndarray:
        return self.signed_areas

    @cached_property
    def total_area(self) -> float:
        return float(self.signed_areas.sum())

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.corners.mean(axis=1)

    @cached_property
    def basis_gradients(self) -> np.ndarray:
        """(T, 3, 2) constant gradients of the three hat functions on each triangle."""
        p = self.corners
        # gradient of barycentric coordinate k is the rotated opposite edge / (2A)
        opp = np.roll(p, -1, axis=1) - np.roll(p, 1, axis=1)
        rot = np.stack([opp[..., 1], -opp[..., 0]], axis=-1)
        return rot / (2.0 * self.signed_areas[:, None, None])

    @cached_property
    def lumped_mass(self) -> np.ndarray:
        """Row sums of the consistent P1 mass matrix (area/3 per incident triangle)."""
        m = np.zeros(self.n_vertices)
        np.add.at(m, self.triangles.ravel(), np.repeat(self.signed_areas / 3.0, 3))
        return m

    @cached_property
    def is_boundary(self) -> np.ndarray:
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.boundary_map] = True
        return mask

    @property
    def interior(self) -> np.ndarray:
        return ~self.is_boundary

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        """(N, 2) vertex pairs along the contour, in contour order."""
        b = self.boundary_map
        return np.column_stack([b, np.roll(b, -1)])

    @cached_property
    def edges(self) -> np.ndarray:
        t = self.triangles
        e = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
        key = np.unique(e[:, 0] * self.n_vertices + e[:, 1])
        return np.column_stack([key // self.n_vertices, key % self.n_vertices])

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric vertex adjacency (edges of the triangulation)."""
        e = self.edges
        n = self.n_vertices
        a = sp.csr_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
        return (a + a.T).tocsr()

    @cached_property
    def vertex_neighbors(self) -> list[np.ndarray]:
        a = self.adjacency
        return [a.indices[a.indptr[i] : a.indptr[i + 1]] for i in range(self.n_vertices)]

    def angles(self) -> np.ndarray:
        """(T, 3) interior angles in degrees."""
        p = self.corners
        a = np.roll(p, -1, axis=1) - p
        b = np.roll(p, 1, axis=1) - p
        cos = np.einsum("tkd,tkd->tk", a, b) / (np.linalg.norm(a, axis=2) * np.linalg.norm(b, axis=2))
        return np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))

    def same_as(self, other: "TriMesh") -> bool:
        if self is other:
            return True
        return (
            self.vertices.shape == other.vertices.shape
            and self.triangles.shape == other.triangles.shape
            and np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.triangles, other.triangles)
        )

    def moved(self, vertices: np.ndarray) -> "TriMesh":
        """Same connectivity at new vertex positions (no quality checks)."""
        return TriMesh(np.asarray(vertices, dtype=float), self.triangles, self.boundary_map, self.h)


def default_mesh_size(c: Contour) -> float:
    return c.perimeter() / len(c)


def triangulate(c: Contour, h: float | None = None) -> TriMesh:
    """Quality mesh of the interior of ``c`` with interior spacing about ``h``.

    Every contour sample is a boundary vertex with its exact coordinates and
    ``boundary_map[i] == i``. Raises :class:`MeshQualityFailure` when the
    20 degree bound cannot be met without splitting boundary segments.
    """
    if h is None:
        h = default_mesh_size(c)
    h = float(h)
    perim = c.perimeter()
    if not (h > 0 and h <= perim / 16 * (1 + 1e-12)):
        raise InvalidArgument(f"mesh size must satisfy 0 < h <= perimeter/16 = {perim / 16:.6g}, got {h}")

    n = len(c)
    origin = c.points.mean(axis=0)
    local = np.round((c.points - origin) / _SNAP) * _SNAP
    segments = np.column_stack([np.arange(n), (np.arange(n) + 1) % n])
    max_area = _AREA_FACTOR * h * h
    opts = f"pq{MIN_ANGLE_DEG:g}a{max_area:.17g}YQ"
    try:
        out = triangle.triangulate({"vertices": local, "segments": segments}, opts)
    except Exception as exc:  # Triangle reports failures as generic errors
        raise DegenerateGeometry(f"triangulation failed: {exc}") from exc

    verts = np.asarray(out["vertices"], dtype=float) + origin
    tris = np.asarray(out["triangles"], dtype=np.int64)
    if len(verts) < n or not np.allclose(verts[:n], c.points, rtol=0, atol=4 * _SNAP):
        raise DegenerateGeometry("mesher did not preserve the contour samples")
    verts[:n] = c.points

    mesh = TriMesh(verts, tris, np.arange(n), h)
    _check_mesh(mesh, c)
    return mesh


def _check_mesh(mesh: TriMesh, c: Contour):
    if np.any(mesh.signed_areas <= 0):
        raise MeshQualityFailure(f"{int(np.sum(mesh.signed_areas <= 0))} inverted triangles")
    # Steiner points on the boundary would break the bijection with the contour
    on_boundary = np.zeros(mesh.n_vertices, dtype=bool)
    t = mesh.triangles
    e = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
    uniq, counts = np.unique(e, axis=0, return_counts=True)
    on_boundary[uniq[counts == 1].ravel()] = True
    if on_boundary.sum() != len(c) or not np.all(on_boundary[: len(c)]):
        raise DegenerateGeometry("mesh boundary does not coincide with the contour samples")
    min_angle = mesh.angles().min()
    if min_angle < MIN_ANGLE_DEG - 1e-9:
        raise MeshQualityFailure(f"minimum angle {min_angle:.3f} deg below {MIN_ANGLE_DEG} deg")


@dataclass(frozen=True)
class MeshStats:
    n_vertices: int
    n_triangles: int
    n_boundary: int
    min_angle: float
    max_angle: float
    min_edge: float
    max_edge: float
    mean_edge: float
    edge_histogram: tuple
    edge_bins: tuple

    @property
    def edge_ratio(self) -> float:
        return self.max_edge / self.min_edge

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["edge_ratio"] = self.edge_ratio
        return d


def mesh_statistics(m: TriMesh, bins: int = 10) -> MeshStats:
    ang = m.angles()
    e = m.edges
    lengths = np.linalg.norm(m.vertices[e[:, 0]] - m.vertices[e[:, 1]], axis=1)
    hist, edges = np.histogram(lengths, bins=bins)
    return MeshStats(
        n_vertices=m.n_vertices,
        n_triangles=m.n_triangles,
        n_boundary=len(m.boundary_map),
        min_angle=float(ang.min()),
        max_angle=float(ang.max()),
        min_edge=float(lengths.min()),
        max_edge=float(lengths.max()),
        mean_edge=float(lengths.mean()),
        edge_histogram=tuple(int(x) for x in hist),
        edge_bins=tuple(float(x) for x in edges),
    )


def write_off(m: TriMesh, path) -> None:
    """OFF text export (z = 0) for external viewers."""
    lines = ["OFF", f"{m.n_vertices} {m.n_triangles} 0"]
    lines += [f"{x!r} {y!r} 0.0" for x, y in m.vertices]
    lines += [f"3 {a} {b} {c}" for a, b, c in m.triangles]
    Path(path).write_text("\n".join(lines) + "\n")
