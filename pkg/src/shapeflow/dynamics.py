"""Flows, geodesic shooting and path diagnostics on shape measures.

The shooter evolves a contour together with the potential of its shape
tangent vector. Positions move with the full recovered velocity; the
potential is updated along particle paths (material form of the projected
geodesic equation)::

    u_new(x + dt * grad u(x)) = u(x) + dt * (|grad u(x)|^2 - w_hat(x))

where ``w_hat`` is the potential of the projection of ``grad(|grad u|^2 / 2)``
onto the shape tangent space.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .contour import BoundaryScalarField, Contour, area, resample_arclength
from .errors import DegenerateGeometry, InvalidArgument, OutOfDomain
from .mesh import TriMesh, default_mesh_size, triangulate
from .poisson import ScalarField, divergence_spread, inner_product, weak_divergence_all
from .recovery import Locator, patch_vertex_gradients, patch_vertex_hessians
from .tangent import TangentVector, _project, delift, lift, lift_on_mesh

logger = logging.getLogger(__name__)

DEFAULT_RELIFT_EVERY = 1


# --------------------------------------------------------------------------- particles


@dataclass
class ParticleSet:
    positions: np.ndarray
    log_detJ: np.ndarray | None = None
    trajectory_history: list[np.ndarray] | None = None
    times: list[float] | None = None

    def __post_init__(self):
        self.positions = np.array(self.positions, dtype=float).reshape(-1, 2)
        if self.log_detJ is None:
            self.log_detJ = np.zeros(len(self.positions))
        else:
            self.log_detJ = np.array(self.log_detJ, dtype=float)
        if not np.all(np.isfinite(self.log_detJ)):
            raise InvalidArgument("log_detJ must be finite")

    def __len__(self) -> int:
        return len(self.positions)


class FlowField:
    """Continuous velocity field from a tangent vector, for particle advection.

    Velocities are patch-recovered vertex gradients, interpolated linearly;
    divergence is the lumped weak divergence, with boundary vertices taking
    the mean of their interior neighbours.
    """

    def __init__(self, alpha: TangentVector):
        m = alpha.mesh
        self.mesh = m
        self.h = m.h
        self.velocity_nodes = patch_vertex_gradients(alpha.potential)
        div = weak_divergence_all(alpha.grad)
        inner = m.interior
        fixed = div.copy()
        fallback = float(np.mean(div[inner])) if inner.any() else float(alpha.div_constant)
        for b in np.flatnonzero(~inner):
            nb = m.vertex_neighbors[b]
            nb = nb[inner[nb]]
            fixed[b] = div[nb].mean() if len(nb) else fallback
        self.divergence_nodes = fixed
        self._locator = Locator(m)

    def velocity(self, points) -> np.ndarray:
        return self._locator.interpolate(self.velocity_nodes, points, max_distance=self.h)

    def divergence(self, points) -> np.ndarray:
        return self._locator.interpolate(self.divergence_nodes, points, max_distance=self.h)


class _Blend:
    def __init__(self, a, b, s):
        self.a, self.b, self.s = a, b, s

    def velocity(self, points):
        if self.s == 0.0:
            return self.a.velocity(points)
        return (1 - self.s) * self.a.velocity(points) + self.s * self.b.velocity(points)

    def divergence(self, points):
        if self.s == 0.0:
            return self.a.divergence(points)
        return (1 - self.s) * self.a.divergence(points) + self.s * self.b.divergence(points)


class PathFlow:
    """Time-dependent field of a stored path, linear in time between samples."""

    def __init__(self, path: "GeodesicPath"):
        self.times = np.asarray(path.times)
        self._alphas = path.potentials
        self._fields: dict[int, FlowField] = {}

    def _field(self, k: int) -> FlowField:
        if k not in self._fields:
            self._fields[k] = FlowField(self._alphas[k])
        return self._fields[k]

    def __call__(self, t: float):
        n = len(self.times)
        k = int(np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, n - 2)) if n > 1 else 0
        if n == 1:
            return self._field(0)
        t0, t1 = self.times[k], self.times[k + 1]
        s = float(np.clip((t - t0) / (t1 - t0), 0.0, 1.0))
        if s == 1.0:
            return self._field(k + 1)
        return _Blend(self._field(k), self._field(k + 1), s)


def integrate_flow(
    field_provider: Callable[[float], object],
    particles: ParticleSet,
    t0: float,
    t1: float,
    dt: float,
    record: bool = False,
) -> ParticleSet:
    """RK4 advection of particles and of their log Jacobian determinants.

    ``field_provider(t)`` must return an object with ``velocity(points)`` and
    ``divergence(points)``. The log-determinant obeys
    ``d/dt log det J = div(alpha)(x(t))``.
    """
    if not dt > 0:
        raise InvalidArgument(f"dt must be positive, got {dt}")
    n = max(1, int(round((t1 - t0) / dt)))
    step = (t1 - t0) / n
    x = particles.positions.copy()
    logj = particles.log_detJ.copy()
    history = [x.copy()] if record else None
    times = [t0] if record else None

    def rhs(t, pos):
        f = field_provider(t)
        return f.velocity(pos), f.divergence(pos)

    for i in range(n):
        t = t0 + i * step
        k1, d1 = rhs(t, x)
        k2, d2 = rhs(t + step / 2, x + step / 2 * k1)
        k3, d3 = rhs(t + step / 2, x + step / 2 * k2)
        k4, d4 = rhs(t + step, x + step * k3)
        x = x + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        logj = logj + step / 6 * (d1 + 2 * d2 + 2 * d3 + d4)
        if record:
            history.append(x.copy())
            times.append(t + step)
    return ParticleSet(x, logj, history, times)


def chord_deviation(particles: ParticleSet) -> np.ndarray:
    """Per-particle max distance of the recorded trajectory from its start-end chord."""
    if not particles.trajectory_history:
        raise InvalidArgument("particle set has no recorded trajectory")
    traj = np.stack(particles.trajectory_history)  # (steps, P, 2)
    a, b = traj[0], traj[-1]
    ab = b - a
    L2 = np.einsum("pd,pd->p", ab, ab)
    rel = traj - a[None]
    t = np.where(L2 > 0, np.einsum("spd,pd->sp", rel, ab) / np.where(L2 > 0, L2, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    d = np.linalg.norm(rel - t[..., None] * ab[None], axis=2)
    return d.max(axis=0)


# --------------------------------------------------------------------------- geodesics


@dataclass(frozen=True)
class StepDiagnostics:
    continuity_residual: float
    uniformity_deviation: float
    kinetic_norm: float


@dataclass
class GeodesicPath:
    times: list[float]
    contours: list[Contour]
    potentials: list[TangentVector]
    step_diagnostics: list[StepDiagnostics] = field(default_factory=list)
    length: float = 0.0
    status: str = "ok"
    message: str = ""
    h: float | None = None

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def kinetic_norms(self) -> np.ndarray:
        return np.array([kinetic_norm(a) for a in self.potentials])


def kinetic_norm(alpha: TangentVector) -> float:
    return float(np.sqrt(max(inner_product(alpha.mesh, alpha.grad, alpha.grad), 0.0)))


def path_length(p: GeodesicPath) -> float:
    """Trapezoidal Benamou-Brenier length ``int ||alpha_t||_{L2(mu_t)} dt``."""
    if len(p.times) < 2:
        return 0.0
    return float(np.trapezoid(p.kinetic_norms(), p.times))


def measure_mass(alpha_or_mesh, c: Contour) -> float:
    """Mesh quadrature of ``int d mu`` with density ``1 / area(c)``."""
    m = alpha_or_mesh.mesh if isinstance(alpha_or_mesh, TangentVector) else alpha_or_mesh
    return float(m.signed_areas.sum() / area(c))


def _mean_zero(u: np.ndarray, m: TriMesh) -> np.ndarray:
    w = m.lumped_mass
    return u - np.dot(w, u) / w.sum()


def _advance(c: Contour, alpha: TangentVector, dt: float, h: float, reimpose: str | None):
    """One material step; returns the new contour and tangent vector.

    ``reimpose`` is ``"project"`` (transport projection onto the tangent
    space), ``"relift"`` (lift of the recovered boundary trace) or ``None``.
    """
    m = alpha.mesh
    u = alpha.potential.values
    vel = patch_vertex_gradients(alpha.potential)
    speed2 = np.einsum("vd,vd->v", vel, vel)
    w_hat = _project(ScalarField(m, 0.5 * speed2)).potential.values
    u_moved = ScalarField(m.moved(m.vertices + dt * vel), u + dt * (speed2 - w_hat))

    c_new = resample_arclength(Contour(u_moved.mesh.vertices[m.boundary_map]), len(c))
    if h > c_new.perimeter() / 16:
        raise DegenerateGeometry(f"contour shrank below the mesh size (perimeter {c_new.perimeter():.3g}, h {h:.3g})")
    m_new = triangulate(c_new, h)
    loc = Locator(u_moved.mesh)
    u_new = loc.interpolate_quadratic(
        u_moved.values,
        patch_vertex_gradients(u_moved),
        patch_vertex_hessians(u_moved),
        m_new.vertices,
        max_distance=h,
    )
    u_new = ScalarField(m_new, _mean_zero(u_new, m_new))
    if reimpose == "project":
        out = _project(u_new)
        return c_new, TangentVector.from_potential(ScalarField(m_new, _mean_zero(out.potential.values, m_new)), out.div_constant)
    if reimpose == "relift":
        trace = delift(c_new, TangentVector.from_potential(u_new, 0.0), "patch")
        return c_new, lift_on_mesh(m_new, c_new, trace)
    provisional = TangentVector.from_potential(u_new, 0.0)
    S = divergence_spread(provisional.grad)[0]
    return c_new, TangentVector(m_new, u_new, provisional.grad, S)


def shoot_geodesic(
    c0: Contour,
    a0: BoundaryScalarField,
    T: float,
    steps: int,
    h: float | None = None,
    relift_every: int = DEFAULT_RELIFT_EVERY,
    reimpose: str = "project",
    diagnose: bool = True,
) -> GeodesicPath:
    """Integrate the projected geodesic equation from ``(c0, lift(a0))``.

    A non-simple contour (or a tangled mesh) stops the integration; the path
    computed so far is returned with ``status == "breakdown"``.
    """
    if steps < 8:
        raise InvalidArgument(f"steps must be >= 8, got {steps}")
    if not T > 0:
        raise InvalidArgument(f"horizon must be positive, got {T}")
    if len(a0) != len(c0):
        raise InvalidArgument(f"initial field has {len(a0)} values for {len(c0)} samples")
    if relift_every < 1:
        raise InvalidArgument("relift_every must be >= 1")
    if reimpose not in ("project", "relift"):
        raise InvalidArgument(f"unknown constraint re-imposition {reimpose!r}")
    if h is None:
        h = default_mesh_size(c0)
    dt = T / steps

    alpha = lift_on_mesh(triangulate(c0, h), c0, a0)
    path = GeodesicPath([0.0], [c0], [alpha], h=h)
    c = c0
    for n in range(steps):
        try:
            due = (n + 1) % relift_every == 0
            c, alpha = _advance(c, alpha, dt, h, reimpose if due else None)
        except (DegenerateGeometry, OutOfDomain) as exc:
            path.status = "breakdown"
            path.message = f"step {n + 1}: {exc}"
            logger.warning("geodesic breakdown at t=%.6g: %s", (n + 1) * dt, exc)
            break
        path.times.append((n + 1) * dt)
        path.contours.append(c)
        path.potentials.append(alpha)

    path.length = path_length(path)
    if diagnose:
        _fill_diagnostics(path)
    return path


def lifted_path(contours: Sequence[Contour], speeds: Sequence[BoundaryScalarField], times, h: float | None = None) -> GeodesicPath:
    """Path of prescribed contours with the lifts of their normal speeds."""
    if not (len(contours) == len(speeds) == len(times)):
        raise InvalidArgument("contours, speeds and times must have equal length")
    t = [float(x) for x in times]
    if any(b <= a for a, b in zip(t, t[1:])):
        raise InvalidArgument("times must be strictly increasing")
    if h is None:
        h = default_mesh_size(contours[0])
    alphas = [lift(c, a, h) for c, a in zip(contours, speeds)]
    path = GeodesicPath(t, list(contours), alphas, h=h)
    path.length = path_length(path)
    return path


def _fill_diagnostics(path: GeodesicPath):
    norms = path.kinetic_norms()
    dev = [a.divergence_deviation() for a in path.potentials]
    cont = np.full(len(path.times), np.nan)
    if len(path.times) >= 3:
        cont = verify_continuity(path).max_relative()
    path.step_diagnostics = [
        StepDiagnostics(float(cont[k]), float(dev[k]), float(norms[k])) for k in range(len(path.times))
    ]


# --------------------------------------------------------------------------- continuity


@dataclass(frozen=True)
class Monomial:
    """Test function ``x**i * y**j``."""

    i: int
    j: int

    @property
    def degree(self) -> int:
        return self.i + self.j

    def __call__(self, p: np.ndarray) -> np.ndarray:
        return p[..., 0] ** self.i * p[..., 1] ** self.j

    def grad(self, p: np.ndarray) -> np.ndarray:
        x, y = p[..., 0], p[..., 1]
        gx = self.i * x ** max(self.i - 1, 0) * y**self.j if self.i else np.zeros_like(x)
        gy = self.j * x**self.i * y ** max(self.j - 1, 0) if self.j else np.zeros_like(x)
        return np.stack([gx, gy], axis=-1)

    def __str__(self) -> str:
        return f"x^{self.i}y^{self.j}"


def monomials(max_degree: int = 3, include_constant: bool = True) -> list[Monomial]:
    out = []
    for d in range(0 if include_constant else 1, max_degree + 1):
        out += [Monomial(d - j, j) for j in range(d + 1)]
    return out


# degree-5 Dunavant rule (7 points) in barycentric coordinates
_A1, _B1 = 0.059715871789770, 0.470142064105115
_A2, _B2 = 0.797426985353087, 0.101286507323456
_QUAD_BARY = np.array(
    [
        [1 / 3, 1 / 3, 1 / 3],
        [_A1, _B1, _B1],
        [_B1, _A1, _B1],
        [_B1, _B1, _A1],
        [_A2, _B2, _B2],
        [_B2, _A2, _B2],
        [_B2, _B2, _A2],
    ]
)
_QUAD_W = np.array([0.225] + [0.132394152788506] * 3 + [0.125939180544827] * 3)


def _quad_points(m: TriMesh) -> np.ndarray:
    return np.einsum("qk,tkd->tqd", _QUAD_BARY, m.corners)


def integrate_measure(m: TriMesh, f: Callable[[np.ndarray], np.ndarray]) -> float:
    """``int f dmu`` for the uniform probability measure on the mesh (exact to degree 5)."""
    vals = f(_quad_points(m))
    return float(np.einsum("t,q,tq->", m.signed_areas, _QUAD_W, vals) / m.total_area)


@dataclass(frozen=True)
class ContinuityReport:
    times: np.ndarray
    test_functions: list
    lhs: np.ndarray  # (n_times, n_phi), NaN at the ends
    rhs: np.ndarray
    residual: np.ndarray
    scale: np.ndarray  # Cauchy-Schwarz bound int |grad phi| |alpha| dmu

    def relative(self, floor: float = 0.1, absolute: float = 1e-12) -> np.ndarray:
        """Residual over ``max(|lhs|, floor * scale)``; residuals below ``absolute`` count as zero."""
        denom = np.maximum(np.abs(self.lhs), floor * self.scale)
        resid = np.where(self.residual <= absolute, 0.0, self.residual)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(denom > 0, resid / np.where(denom > 0, denom, 1.0), np.where(resid > 0, np.inf, 0.0))

    def max_relative(self, **kw) -> np.ndarray:
        """Per-time maximum relative residual over test functions (NaN at the ends)."""
        rel = self.relative(**kw)
        out = np.full(len(self.times), np.nan)
        if len(self.times) > 2:
            out[1:-1] = rel[1:-1].max(axis=1)
        return out


def verify_continuity(p: GeodesicPath, test_functions: Sequence[Monomial] | None = None) -> ContinuityReport:
    """Check ``d/dt int phi dmu_t = int <grad phi, alpha_t> dmu_t`` along a path.

    The left side is a centered difference of mesh quadratures, so the first
    and last samples carry NaN.
    """
    if len(p.times) < 3:
        raise InvalidArgument("continuity check needs at least 3 path samples")
    phis = list(test_functions) if test_functions is not None else monomials(3)
    t = np.asarray(p.times, dtype=float)
    moments = np.zeros((len(t), len(phis)))
    rhs = np.zeros_like(moments)
    scale = np.zeros_like(moments)
    for k, a in enumerate(p.potentials):
        m = a.mesh
        qp = _quad_points(m)
        w = np.einsum("t,q->tq", m.signed_areas, _QUAD_W) / m.total_area
        alpha = a.grad.values[:, None, :]
        alpha_norm = np.linalg.norm(alpha, axis=-1)
        for j, phi in enumerate(phis):
            g = phi.grad(qp)
            moments[k, j] = float(np.sum(w * phi(qp)))
            rhs[k, j] = float(np.sum(w * (g[..., 0] * alpha[..., 0] + g[..., 1] * alpha[..., 1])))
            scale[k, j] = float(np.sum(w * np.linalg.norm(g, axis=-1) * alpha_norm))
    lhs = np.full_like(moments, np.nan)
    lhs[1:-1] = (moments[2:] - moments[:-2]) / (t[2:] - t[:-2])[:, None]
    residual = np.abs(lhs - rhs)
    return ContinuityReport(t, phis, lhs, rhs, residual, scale)


# --------------------------------------------------------------------------- density / hessian


@dataclass(frozen=True)
class DensityReport:
    times: np.ndarray
    std: np.ndarray
    mean: np.ndarray
    particles: ParticleSet


def seed_particles(m: TriMesh, n_particles: int) -> ParticleSet:
    """Deterministic, quasi-uniform seeds at interior mesh vertices."""
    inner = np.flatnonzero(m.interior)
    if n_particles < len(inner):
        inner = inner[np.linspace(0, len(inner) - 1, n_particles).round().astype(int)]
    return ParticleSet(m.vertices[inner])


def density_uniformity(p: GeodesicPath, n_particles: int = 200) -> DensityReport:
    """Advect seeds along the path's fields; report per-time std of ``log det J``."""
    particles = seed_particles(p.potentials[0].mesh, n_particles)
    if len(p.times) < 2:
        z = np.zeros(1)
        return DensityReport(np.asarray(p.times), z, z, particles)
    flow = PathFlow(p)
    cur = particles
    history, stds, means = [particles.positions.copy()], [0.0], [0.0]
    for k in range(1, len(p.times)):
        cur = integrate_flow(flow, cur, p.times[k - 1], p.times[k], p.times[k] - p.times[k - 1])
        history.append(cur.positions.copy())
        stds.append(float(np.std(cur.log_detJ)))
        means.append(float(np.mean(cur.log_detJ)))
    cur.trajectory_history = history
    cur.times = list(p.times)
    return DensityReport(np.asarray(p.times), np.array(stds), np.array(means), cur)


def hessian_frobenius(alpha: TangentVector) -> np.ndarray:
    """Frobenius norm of the recovered Hessian of the potential at interior vertices."""
    H = patch_vertex_hessians(alpha.potential)
    return np.sqrt(np.einsum("vij,vij->v", H, H))[alpha.mesh.interior]


def hessian_departure(alpha: TangentVector) -> float:
    """Spatial std of the Hessian Frobenius norm (0 means straight-line transport stays a shape measure)."""
    return float(np.std(hessian_frobenius(alpha)))
