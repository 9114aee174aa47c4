"""P1 finite elements for the pure-Neumann and homogeneous-Dirichlet problems.

Sign convention: every solve targets ``Laplace(u) = rhs`` (not ``-Laplace``).
In weak form, with hat functions ``phi_i``::

    sum_j K_ij u_j = int_dOmega g phi_i ds - rhs * m_i

where ``K`` is the stiffness matrix and ``m_i`` the lumped mass (row sums of
the consistent mass matrix).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .contour import BoundaryScalarField
from .errors import IncompatibleData, InvalidArgument, SolverFailure
from .mesh import TriMesh

RESIDUAL_TOL = 1e-10
COMPAT_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Nodal P1 potential on a mesh."""

    mesh: TriMesh
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if len(v) != self.mesh.n_vertices:
            raise InvalidArgument(f"field has {len(v)} values for {self.mesh.n_vertices} vertices")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def mean(self) -> float:
        """Mass-weighted mean over the mesh."""
        m = self.mesh.lumped_mass
        return float(np.dot(m, self.values) / m.sum())

    def __add__(self, other):
        return ScalarField(self.mesh, self.values + _values_on(self.mesh, other))

    def __sub__(self, other):
        return ScalarField(self.mesh, self.values - _values_on(self.mesh, other))

    def __mul__(self, s: float):
        return ScalarField(self.mesh, self.values * float(s))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class VectorField:
    """Piecewise-constant vector field, one vector per triangle."""

    mesh: TriMesh
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape == (2,):
            v = np.tile(v, (self.mesh.n_triangles, 1))
        if v.shape != (self.mesh.n_triangles, 2):
            raise InvalidArgument(f"vector field shape {v.shape} does not match {self.mesh.n_triangles} triangles")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __add__(self, other):
        return VectorField(self.mesh, self.values + _values_on(self.mesh, other))

    def __sub__(self, other):
        return VectorField(self.mesh, self.values - _values_on(self.mesh, other))

    def __mul__(self, s: float):
        return VectorField(self.mesh, self.values * float(s))

    __rmul__ = __mul__


def _values_on(mesh: TriMesh, other):
    if isinstance(other, (ScalarField, VectorField)):
        check_same_mesh(mesh, other.mesh)
        return other.values
    return np.asarray(other, dtype=float)


def check_same_mesh(a: TriMesh, b: TriMesh):
    if not a.same_as(b):
        raise InvalidArgument("fields live on different meshes")


def stiffness_matrix(m: TriMesh) -> sp.csr_matrix:
    if "stiffness" not in m.cache:
        g = m.basis_gradients
        local = np.einsum("tid,tjd->tij", g, g) * m.signed_areas[:, None, None]
        rows = np.repeat(m.triangles, 3, axis=1).ravel()
        cols = np.tile(m.triangles, (1, 3)).ravel()
        n = m.n_vertices
        m.cache["stiffness"] = sp.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))
    return m.cache["stiffness"]


def mass_matrix(m: TriMesh) -> sp.csr_matrix:
    """Consistent P1 mass matrix."""
    if "mass" not in m.cache:
        local = (np.ones((3, 3)) + np.eye(3)) / 12.0
        vals = m.signed_areas[:, None, None] * local[None]
        rows = np.repeat(m.triangles, 3, axis=1).ravel()
        cols = np.tile(m.triangles, (1, 3)).ravel()
        n = m.n_vertices
        m.cache["mass"] = sp.csr_matrix((vals.ravel(), (rows, cols)), shape=(n, n))
    return m.cache["mass"]


def boundary_mass_matrix(m: TriMesh) -> sp.csr_matrix:
    """P1 mass matrix of the boundary polyline, shape (V, N) acting on contour samples."""
    if "bmass" not in m.cache:
        n = len(m.boundary_map)
        e = m.boundary_edges
        length = np.linalg.norm(m.vertices[e[:, 1]] - m.vertices[e[:, 0]], axis=1)
        idx = np.arange(n)
        nxt = (idx + 1) % n
        rows = np.concatenate([e[:, 0], e[:, 0], e[:, 1], e[:, 1]])
        cols = np.concatenate([idx, nxt, idx, nxt])
        vals = np.concatenate([2 * length, length, length, 2 * length]) / 6.0
        m.cache["bmass"] = sp.csr_matrix((vals, (rows, cols)), shape=(m.n_vertices, n))
    return m.cache["bmass"]


def boundary_flux_integral(m: TriMesh, g) -> float:
    """Trapezoidal integral of boundary data along the mesh boundary."""
    g = np.asarray(g, dtype=float)
    e = m.boundary_edges
    length = np.linalg.norm(m.vertices[e[:, 1]] - m.vertices[e[:, 0]], axis=1)
    return float(np.dot(length, 0.5 * (g + np.roll(g, -1))))


def compatible_divergence(m: TriMesh, g) -> float:
    """The only constant ``S`` for which the Neumann problem is solvable."""
    return boundary_flux_integral(m, g) / m.total_area


def _solve_checked(lu, matrix, rhs):
    x = lu.solve(rhs)
    if not np.all(np.isfinite(x)):
        raise SolverFailure("linear solve produced non-finite values")
    scale = max(np.linalg.norm(rhs), np.linalg.norm(matrix @ x))
    if scale > 0:
        res = np.linalg.norm(matrix @ x - rhs) / scale
        if res > RESIDUAL_TOL:
            raise SolverFailure(f"relative residual {res:.3e} exceeds {RESIDUAL_TOL:g}")
    return x


def _factor(matrix):
    try:
        return spla.splu(sp.csc_matrix(matrix))
    except RuntimeError as exc:
        raise SolverFailure(f"factorization failed: {exc}") from exc


def _neumann_system(m: TriMesh):
    if "neumann_lu" not in m.cache:
        k = stiffness_matrix(m)
        w = m.lumped_mass[:, None]
        aug = sp.bmat([[k, sp.csr_matrix(w)], [sp.csr_matrix(w.T), None]], format="csc")
        m.cache["neumann_aug"] = aug
        m.cache["neumann_lu"] = _factor(aug)
    return m.cache["neumann_aug"], m.cache["neumann_lu"]


def _dirichlet_system(m: TriMesh):
    if "dirichlet_lu" not in m.cache:
        inner = np.flatnonzero(m.interior)
        kii = stiffness_matrix(m)[inner][:, inner].tocsc()
        m.cache["dirichlet_inner"] = inner
        m.cache["dirichlet_kii"] = kii
        m.cache["dirichlet_lu"] = _factor(kii)
    return m.cache["dirichlet_inner"], m.cache["dirichlet_kii"], m.cache["dirichlet_lu"]


def solve_neumann(m: TriMesh, g, S: float | None = None) -> ScalarField:
    """Solve ``Laplace(u) = S`` in the domain with ``du/dn = g`` on the boundary.

    The additive constant is fixed by a Lagrange multiplier enforcing a zero
    mass-weighted mean. ``S`` defaults to the compatible value; an explicit
    ``S`` that differs from it by more than ``1e-8`` (relative) raises
    :class:`IncompatibleData`.
    """
    g = g.values if isinstance(g, BoundaryScalarField) else np.asarray(g, dtype=float)
    if len(g) != len(m.boundary_map):
        raise InvalidArgument(f"boundary data has {len(g)} values for {len(m.boundary_map)} boundary vertices")
    s_compat = compatible_divergence(m, g)
    if S is None:
        S = s_compat
    else:
        e = m.boundary_edges
        length = np.linalg.norm(m.vertices[e[:, 1]] - m.vertices[e[:, 0]], axis=1)
        scale = max(abs(s_compat), float(np.dot(length, np.abs(g))) / m.total_area)
        if abs(S - s_compat) > COMPAT_TOL * scale:
            raise IncompatibleData(f"S = {S!r} but compatibility requires S = {s_compat!r}")
    b = boundary_mass_matrix(m) @ g - S * m.lumped_mass
    aug, lu = _neumann_system(m)
    rhs = np.concatenate([b, [0.0]])
    x = _solve_checked(lu, aug, rhs)
    return ScalarField(m, x[:-1])


def _dirichlet_solve(m: TriMesh, load_inner: np.ndarray) -> ScalarField:
    inner, kii, lu = _dirichlet_system(m)
    u = np.zeros(m.n_vertices)
    if np.any(load_inner):
        u[inner] = _solve_checked(lu, kii, load_inner)
    return ScalarField(m, u)


def solve_dirichlet(m: TriMesh, rhs: float, boundary_value: float = 0.0) -> ScalarField:
    """Solve ``Laplace(u) = rhs`` (a constant) with ``u = 0`` on the boundary."""
    if boundary_value != 0:
        raise InvalidArgument("only homogeneous Dirichlet data is supported")
    inner, _, _ = _dirichlet_system(m)
    return _dirichlet_solve(m, -float(rhs) * m.lumped_mass[inner])


def solve_dirichlet_field(m: TriMesh, u: ScalarField, boundary_value: float = 0.0) -> ScalarField:
    """Zero-trace ``w`` whose weak Laplacian matches that of ``u`` at interior vertices.

    The load is the stiffness action ``K u`` on interior rows, so no second
    derivatives of the P1 field are ever formed.
    """
    if boundary_value != 0:
        raise InvalidArgument("only homogeneous Dirichlet data is supported")
    check_same_mesh(m, u.mesh)
    inner, _, _ = _dirichlet_system(m)
    return _dirichlet_solve(m, (stiffness_matrix(m) @ u.values)[inner])


def gradient(u: ScalarField) -> VectorField:
    """Exact per-triangle gradient (differences against the first corner, so constants give 0)."""
    m = u.mesh
    v = u.values[m.triangles]
    d = v[:, 1:] - v[:, :1]
    return VectorField(m, np.einsum("tk,tkd->td", d, m.basis_gradients[:, 1:]))


def inner_product(m: TriMesh, alpha: VectorField, beta: VectorField) -> float:
    """Transport inner product ``|Omega|^-1 * int <alpha, beta> dx``."""
    check_same_mesh(m, alpha.mesh)
    check_same_mesh(m, beta.mesh)
    dots = np.einsum("td,td->t", alpha.values, beta.values)
    return float(np.dot(m.signed_areas, dots) / m.total_area)


def ot_norm(alpha: VectorField) -> float:
    return float(np.sqrt(max(inner_product(alpha.mesh, alpha, alpha), 0.0)))


def mean_vector(alpha: VectorField) -> np.ndarray:
    """``int alpha dmu`` for the uniform probability measure on the mesh."""
    m = alpha.mesh
    return m.signed_areas @ alpha.values / m.total_area


def weak_divergence_all(alpha: VectorField) -> np.ndarray:
    """Lumped weak divergence ``-int alpha . grad(phi_i) / m_i`` at every vertex.

    Values at boundary vertices omit the boundary flux and are not
    meaningful as pointwise divergences.
    """
    m = alpha.mesh
    contrib = np.einsum("td,tkd->tk", alpha.values, m.basis_gradients) * m.signed_areas[:, None]
    acc = np.zeros(m.n_vertices)
    np.add.at(acc, m.triangles.ravel(), contrib.ravel())
    return -acc / m.lumped_mass


def divergence(alpha: VectorField) -> np.ndarray:
    """Per-vertex lumped weak divergence; boundary vertices are NaN (unreliable)."""
    d = weak_divergence_all(alpha)
    d[alpha.mesh.is_boundary] = np.nan
    return d


def divergence_spread(alpha: VectorField) -> tuple[float, float]:
    """Mass-weighted mean and standard deviation of the interior divergence."""
    m = alpha.mesh
    d = weak_divergence_all(alpha)[m.interior]
    w = m.lumped_mass[m.interior]
    mean = float(np.dot(w, d) / w.sum())
    std = float(np.sqrt(np.dot(w, (d - mean) ** 2) / w.sum()))
    return mean, std
