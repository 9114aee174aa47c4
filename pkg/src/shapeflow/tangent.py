"""Shape tangent vectors: lifting, delifting, decomposition and projection.

A shape tangent vector is the gradient of a potential whose Laplacian is a
spatial constant ``S`` inside the shape. Lifting turns a normal contour
speed into such a field through a pure-Neumann solve; the projection maps an
arbitrary potential onto this space under the transport inner product.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contour import BoundaryScalarField, Contour, area, boundary_integral, normal_field
from .errors import InvalidArgument, SolverFailure
from .mesh import TriMesh, triangulate
from .poisson import (
    ScalarField,
    VectorField,
    divergence_spread,
    gradient,
    inner_product,
    mean_vector,
    ot_norm,
    solve_dirichlet,
    solve_dirichlet_field,
    solve_neumann,
)
from .recovery import average_vertex_gradients, vertex_gradients

DIV_STD_REL = 0.05
DIV_STD_ABS = 1e-6


@dataclass(frozen=True, eq=False)
class TangentVector:
    """Gradient field ``grad = grad(potential)`` with constant divergence ``div_constant``."""

    mesh: TriMesh
    potential: ScalarField
    grad: VectorField
    div_constant: float

    @classmethod
    def from_potential(cls, u: ScalarField, div_constant: float) -> "TangentVector":
        return cls(u.mesh, u, gradient(u), float(div_constant))

    def norm(self) -> float:
        return ot_norm(self.grad)

    def divergence_deviation(self) -> float:
        """Mass-weighted std of the interior weak divergence."""
        return divergence_spread(self.grad)[1]

    def satisfies_constant_divergence(self) -> bool:
        return self.divergence_deviation() <= DIV_STD_REL * abs(self.div_constant) + DIV_STD_ABS


@dataclass(frozen=True, eq=False)
class TangentDecomposition:
    v_trans: np.ndarray
    lambda_scale: float
    alpha_scale: VectorField
    alpha_def: VectorField
    residual_norms: tuple[float, float, float]

    def translation_field(self) -> VectorField:
        return VectorField(self.alpha_def.mesh, self.v_trans)

    def reconstruct(self) -> VectorField:
        return self.translation_field() + self.alpha_scale * self.lambda_scale + self.alpha_def

    def pairwise_inner_products(self) -> dict[str, float]:
        m = self.alpha_def.mesh
        t = self.translation_field()
        s = self.alpha_scale * self.lambda_scale
        return {
            "trans_scale": inner_product(m, t, s),
            "trans_def": inner_product(m, t, self.alpha_def),
            "scale_def": inner_product(m, s, self.alpha_def),
        }

    def report(self) -> dict:
        return {
            "v_trans": [float(x) for x in self.v_trans],
            "lambda": float(self.lambda_scale),
            "norms": {
                "trans": self.residual_norms[0],
                "scale": self.residual_norms[1],
                "def": self.residual_norms[2],
            },
            "orthogonality": self.pairwise_inner_products(),
        }


def check_mesh_on_contour(m: TriMesh, c: Contour):
    if len(m.boundary_map) != len(c) or not np.array_equal(m.vertices[m.boundary_map], c.points):
        raise InvalidArgument("mesh boundary does not match the contour samples")


def lift_on_mesh(m: TriMesh, c: Contour, a: BoundaryScalarField) -> TangentVector:
    """Lift on an existing mesh of ``c``."""
    check_mesh_on_contour(m, c)
    if len(a) != len(c):
        raise InvalidArgument(f"normal speed has {len(a)} values for {len(c)} samples")
    S = boundary_integral(c, a) / area(c)
    u = solve_neumann(m, a, S)
    return TangentVector.from_potential(u, S)


def lift(c: Contour, a: BoundaryScalarField, h: float | None = None, mesh: TriMesh | None = None) -> TangentVector:
    """Constant-divergence flow field whose normal trace on ``c`` is ``a``."""
    if mesh is None:
        if len(a) != len(c):
            raise InvalidArgument(f"normal speed has {len(a)} values for {len(c)} samples")
        mesh = triangulate(c, h)
    return lift_on_mesh(mesh, c, a)


def delift(c: Contour, alpha: TangentVector, recovery: str = "patch") -> BoundaryScalarField:
    """Normal component of ``alpha`` at the contour samples.

    Boundary vectors come from the vertex gradient recovery named by
    ``recovery`` (``"average"`` or ``"patch"``).
    """
    m = alpha.mesh
    check_mesh_on_contour(m, c)
    if recovery == "average":
        vec = average_vertex_gradients(alpha.grad)[m.boundary_map]
    else:
        vec = vertex_gradients(alpha.potential, recovery)[m.boundary_map]
    n = normal_field(c).vectors
    return BoundaryScalarField(np.einsum("ij,ij->i", vec, n))


def scale_component_on_mesh(m: TriMesh) -> TangentVector:
    if "scale_component" not in m.cache:
        s = solve_dirichlet(m, 1.0)
        m.cache["scale_component"] = TangentVector.from_potential(s, 1.0)
    return m.cache["scale_component"]


def scale_component(c: Contour, h: float | None = None, mesh: TriMesh | None = None) -> TangentVector:
    """Unit-divergence field with zero potential on the boundary."""
    if mesh is None:
        mesh = triangulate(c, h)
    else:
        check_mesh_on_contour(mesh, c)
    return scale_component_on_mesh(mesh)


def decompose(c: Contour, alpha: TangentVector) -> TangentDecomposition:
    """Split ``alpha`` into translation, scale and deformation parts."""
    m = alpha.mesh
    check_mesh_on_contour(m, c)
    scale = scale_component_on_mesh(m)
    lam = float(alpha.div_constant)
    v = mean_vector(alpha.grad) - lam * mean_vector(scale.grad)
    trans = VectorField(m, v)
    alpha_def = alpha.grad - trans - scale.grad * lam
    norms = (float(np.linalg.norm(v)), abs(lam) * scale.norm(), ot_norm(alpha_def))
    return TangentDecomposition(np.asarray(v), lam, scale.grad, alpha_def, norms)


def project_to_stan(c: Contour, u: ScalarField) -> TangentVector:
    """Transport-orthogonal projection of ``grad(u)`` onto the shape tangent space.

    Returns the potential ``u - u_perp + lam * u_scale`` where ``u_perp`` is
    the zero-trace potential with the same weak Laplacian as ``u`` and
    ``lam`` removes the scale component of ``grad(u_perp)``.
    """
    m = u.mesh
    check_mesh_on_contour(m, c)
    return _project(u)


def _project(u: ScalarField) -> TangentVector:
    m = u.mesh
    scale = scale_component_on_mesh(m)
    u_perp = solve_dirichlet_field(m, u)
    ss = inner_product(m, scale.grad, scale.grad)
    if not ss > 0:
        raise SolverFailure("scale component has zero norm")
    lam = inner_product(m, gradient(u_perp), scale.grad) / ss
    u_hat = u - u_perp + scale.potential * lam
    return TangentVector.from_potential(u_hat, lam)
