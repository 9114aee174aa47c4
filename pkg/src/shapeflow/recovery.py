"""Nodal derivative recovery and point location on P1 meshes.

Two gradient recoveries are offered at vertices:

* ``"average"``: area-weighted mean of the incident triangle gradients
  (first order at the boundary).
* ``"patch"``: least-squares quadratic fit of the nodal values over the
  two-ring vertex patch; exact for quadratic data, and the source of the
  recovered Hessian.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .errors import InvalidArgument, OutOfDomain
from .mesh import TriMesh
from .poisson import ScalarField, VectorField, gradient

def average_vertex_gradients(alpha: VectorField) -> np.ndarray:
    """(V, 2) area-weighted mean of the incident triangle vectors."""
    m = alpha.mesh
    acc = np.zeros((m.n_vertices, 2))
    w = np.zeros(m.n_vertices)
    contrib = alpha.values * m.signed_areas[:, None]
    for k in range(3):
        np.add.at(acc, m.triangles[:, k], contrib)
        np.add.at(w, m.triangles[:, k], m.signed_areas)
    return acc / w[:, None]


def _patch_operators(m: TriMesh) -> dict[str, sp.csr_matrix]:
    """Sparse maps from nodal values to recovered gx, gy, hxx, hxy, hyy."""
    if "patch_ops" in m.cache:
        return m.cache["patch_ops"]
    n = m.n_vertices
    adj = m.adjacency + sp.identity(n, format="csr")
    ring2 = (adj @ adj).tocsr()
    ring2.sort_indices()
    counts = np.diff(ring2.indptr)
    width = int(counts.max())
    # pad each patch row to the common width with the centre vertex (masked out)
    slot = np.arange(len(ring2.indices)) - np.repeat(ring2.indptr[:-1], counts)
    idx = np.repeat(np.arange(n)[:, None], width, axis=1)
    mask = np.zeros((n, width))
    owner = np.repeat(np.arange(n), counts)
    idx[owner, slot] = ring2.indices
    mask[owner, slot] = 1.0

    d = m.vertices[idx] - m.vertices[:, None, :]
    scale = np.sqrt((mask * np.einsum("ipd,ipd->ip", d, d)).sum(1) / mask.sum(1))
    dx = d[..., 0] / scale[:, None]
    dy = d[..., 1] / scale[:, None]
    design = np.stack([np.ones_like(dx), dx, dy, dx * dx, dx * dy, dy * dy], axis=-1) * mask[..., None]
    # least-squares pseudo-inverse through the (6 x 6) normal equations
    normal = np.einsum("ipa,ipb->iab", design, design)
    pinv = np.linalg.solve(normal, design.transpose(0, 2, 1))  # (n, 6, width)
    rows = np.repeat(np.arange(n), width)
    cols = idx.ravel()

    def op(coef, factor):
        vals = (pinv[:, coef, :] * mask * factor[:, None]).ravel()
        out = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        out.sum_duplicates()
        return out

    ops = {
        "gx": op(1, 1.0 / scale),
        "gy": op(2, 1.0 / scale),
        "hxx": op(3, 2.0 / scale**2),
        "hxy": op(4, 1.0 / scale**2),
        "hyy": op(5, 2.0 / scale**2),
    }
    m.cache["patch_ops"] = ops
    return ops


def patch_vertex_gradients(u: ScalarField) -> np.ndarray:
    ops = _patch_operators(u.mesh)
    return np.column_stack([ops["gx"] @ u.values, ops["gy"] @ u.values])


def patch_vertex_hessians(u: ScalarField) -> np.ndarray:
    """(V, 2, 2) recovered Hessians."""
    ops = _patch_operators(u.mesh)
    hxx, hxy, hyy = (ops[k] @ u.values for k in ("hxx", "hxy", "hyy"))
    return np.stack([np.stack([hxx, hxy], -1), np.stack([hxy, hyy], -1)], -2)


def vertex_gradients(u: ScalarField, method: str = "patch") -> np.ndarray:
    if method == "patch":
        return patch_vertex_gradients(u)
    if method == "average":
        return average_vertex_gradients(gradient(u))
    raise InvalidArgument(f"unknown recovery method {method!r}")


class Locator:
    """Point location in a triangle mesh with nearest-triangle fallback."""

    def __init__(self, mesh: TriMesh, k: int = 16):
        self.mesh = mesh
        self.k = min(k, mesh.n_triangles)
        self._tree = cKDTree(mesh.centroids)
        p = mesh.corners
        self._p0 = p[:, 0]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        # inverse of [e1 e2] for barycentric solves
        self._inv = np.stack([np.stack([e2[:, 1], -e2[:, 0]], -1), np.stack([-e1[:, 1], e1[:, 0]], -1)], -2) / det[:, None, None]

    def _bary(self, tri, pts):
        rel = pts - self._p0[tri]
        l12 = np.einsum("...ij,...j->...i", self._inv[tri], rel)
        return np.concatenate([1.0 - l12.sum(-1, keepdims=True), l12], axis=-1)

    def locate(self, points) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return triangle index, barycentric coordinates and distance to that triangle."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        _, cand = self._tree.query(pts, k=self.k)
        cand = np.asarray(cand).reshape(len(pts), -1)
        bary = self._bary(cand, pts[:, None, :])
        worst = bary.min(axis=-1)
        best = np.argmax(worst, axis=1)
        rows = np.arange(len(pts))
        tri = cand[rows, best]
        lam = bary[rows, best]
        dist = np.zeros(len(pts))
        outside = worst[rows, best] < -1e-12
        if np.any(outside):
            dist[outside] = self._distance(tri[outside], pts[outside])
        return tri, lam, dist

    def _distance(self, tri, pts):
        p = self.mesh.corners[tri]
        best = np.full(len(pts), np.inf)
        for a, b in ((0, 1), (1, 2), (2, 0)):
            ab = p[:, b] - p[:, a]
            t = np.clip(np.einsum("ij,ij->i", pts - p[:, a], ab) / np.einsum("ij,ij->i", ab, ab), 0, 1)
            best = np.minimum(best, np.linalg.norm(pts - (p[:, a] + t[:, None] * ab), axis=1))
        return best

    def interpolate(self, nodal: np.ndarray, points, max_distance: float | None = None) -> np.ndarray:
        """Barycentric interpolation of nodal data (extrapolating outside)."""
        tri, lam, dist = self.locate(points)
        if max_distance is not None and np.any(dist > max_distance):
            raise OutOfDomain(f"point {float(dist.max()):.3g} outside the mesh (limit {max_distance:.3g})")
        vals = np.asarray(nodal)[self.mesh.triangles[tri]]
        return np.einsum("pk,pk...->p...", lam, vals)

    def interpolate_quadratic(self, nodal, grads, hessians, points, max_distance: float | None = None) -> np.ndarray:
        """Blend of the vertex Taylor quadratics with barycentric weights.

        Exact for quadratic data when ``grads``/``hessians`` are exact, which
        keeps repeated transfers between moving meshes from accumulating the
        O(h^2) bias of linear interpolation.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        tri, lam, dist = self.locate(pts)
        if max_distance is not None and np.any(dist > max_distance):
            raise OutOfDomain(f"point {float(dist.max()):.3g} outside the mesh (limit {max_distance:.3g})")
        idx = self.mesh.triangles[tri]  # (P, 3)
        d = pts[:, None, :] - self.mesh.vertices[idx]
        vals = (
            np.asarray(nodal)[idx]
            + np.einsum("pkd,pkd->pk", np.asarray(grads)[idx], d)
            + 0.5 * np.einsum("pkd,pkde,pke->pk", d, np.asarray(hessians)[idx], d)
        )
        return np.einsum("pk,pk->p", lam, vals)
