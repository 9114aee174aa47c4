"""Closed polyline contours and boundary quantities.

A :class:`Contour` is an ordered, counter-clockwise, simple closed polyline.
Point ``N-1`` connects back to point ``0``. Boundary fields carry one value
(or one vector) per sample.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateGeometry, InvalidArgument

MIN_SAMPLES = 16
GAP_TOL = 1e-12
TOUCH_TOL = 1e-12


def _segment_distances(p1, p2, q1, q2):
    """Minimum distance between segment pairs (vectorised, zero on crossing)."""

    def cross(o, a, b):
        return (a[:, 0] - o[:, 0]) * (b[:, 1] - o[:, 1]) - (a[:, 1] - o[:, 1]) * (b[:, 0] - o[:, 0])

    d1 = cross(q1, q2, p1)
    d2 = cross(q1, q2, p2)
    d3 = cross(p1, p2, q1)
    d4 = cross(p1, p2, q2)
    crossing = (d1 * d2 < 0) & (d3 * d4 < 0)

    def point_seg(x, a, b):
        ab = b - a
        denom = np.einsum("ij,ij->i", ab, ab)
        t = np.clip(np.einsum("ij,ij->i", x - a, ab) / denom, 0.0, 1.0)
        return np.linalg.norm(x - (a + t[:, None] * ab), axis=1)

    dist = np.minimum.reduce(
        [point_seg(p1, q1, q2), point_seg(p2, q1, q2), point_seg(q1, p1, p2), point_seg(q2, p1, p2)]
    )
    return np.where(crossing, 0.0, dist)


def find_self_intersections(points: np.ndarray, tol: float = TOUCH_TOL) -> np.ndarray:
    """Index pairs ``(i, j)`` of non-adjacent closed-polyline segments closer than ``tol``.

    Segment ``i`` joins ``points[i]`` and ``points[(i + 1) % N]``.
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    a = pts
    b = np.roll(pts, -1, axis=0)
    lo = np.minimum(a, b) - tol
    hi = np.maximum(a, b) + tol
    # candidate pairs: segments within tol have midpoints closer than max length + tol
    mid = 0.5 * (a + b)
    reach = float(np.linalg.norm(b - a, axis=1).max()) + 2 * tol
    pairs = cKDTree(mid).query_pairs(reach, output_type="ndarray")
    i, j = np.sort(pairs, axis=1).T if len(pairs) else (np.zeros(0, int), np.zeros(0, int))
    # adjacent segments share a vertex
    keep = (j - i >= 2) & ~((i == 0) & (j == n - 1))
    i, j = i[keep], j[keep]
    overlap = np.all(lo[i] <= hi[j], axis=1) & np.all(lo[j] <= hi[i], axis=1)
    i, j = i[overlap], j[overlap]
    if len(i) == 0:
        return np.zeros((0, 2), dtype=int)
    d = _segment_distances(a[i], b[i], a[j], b[j])
    bad = d <= tol
    out = np.column_stack([i[bad], j[bad]])
    return out[np.lexsort((out[:, 1], out[:, 0]))]


def signed_area(points: np.ndarray) -> float:
    pts = np.asarray(points, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


@dataclass(frozen=True, eq=False)
class Contour:
    """Simple, counter-clockwise closed polyline with at least 16 samples.

    Construction validates every invariant and raises
    :class:`~shapeflow.errors.DegenerateGeometry` on violation.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InvalidArgument(f"contour points must have shape (N, 2), got {pts.shape}")
        if len(pts) < MIN_SAMPLES:
            raise DegenerateGeometry(f"contour needs at least {MIN_SAMPLES} samples, got {len(pts)}")
        if not np.all(np.isfinite(pts)):
            raise DegenerateGeometry("contour contains non-finite coordinates")
        gaps = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
        if np.any(gaps <= GAP_TOL):
            k = int(np.argmin(gaps))
            raise DegenerateGeometry(f"consecutive samples {k} and {(k + 1) % len(pts)} coincide")
        if signed_area(pts) <= 0:
            raise DegenerateGeometry("contour must be counter-clockwise (signed area > 0)")
        hits = find_self_intersections(pts)
        if len(hits):
            i, j = hits[0]
            raise DegenerateGeometry(f"contour is not simple: segments {i} and {j} intersect")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def n(self) -> int:
        return len(self.points)

    def segment_lengths(self) -> np.ndarray:
        """Length of segment ``i`` (from sample ``i`` to ``i + 1``)."""
        return np.linalg.norm(np.roll(self.points, -1, axis=0) - self.points, axis=1)

    def perimeter(self) -> float:
        return float(self.segment_lengths().sum())

    def quadrature_weights(self) -> np.ndarray:
        """Trapezoidal arclength weights: half of each adjacent segment."""
        seg = self.segment_lengths()
        return 0.5 * (seg + np.roll(seg, 1))

    def reference_angle(self) -> np.ndarray:
        """Normalised arclength parameter in ``[0, 2*pi)`` starting at sample 0.

        For an equispaced circle sampled from angle 0 this is the polar angle.
        """
        seg = self.segment_lengths()
        s = np.concatenate([[0.0], np.cumsum(seg)[:-1]])
        return 2.0 * np.pi * s / seg.sum()

    def translated(self, offset) -> "Contour":
        return Contour(self.points + np.asarray(offset, dtype=float))

    def diameter(self) -> float:
        d = self.points[:, None, :] - self.points[None, :, :]
        return float(np.sqrt(np.max(np.einsum("ijk,ijk->ij", d, d))))


@dataclass(frozen=True, eq=False)
class BoundaryScalarField:
    """One real value per contour sample (a normal deformation speed)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True, eq=False)
class BoundaryVectorField:
    vectors: np.ndarray

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2:
            raise InvalidArgument(f"boundary vectors must have shape (N, 2), got {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    def __len__(self) -> int:
        return len(self.vectors)


def _check_length(c: Contour, n: int, what: str):
    if n != len(c):
        raise InvalidArgument(f"{what} has {n} entries but contour has {len(c)} samples")


def resample_arclength(c: Contour, m: int) -> Contour:
    """Resample ``c`` at ``m`` points equispaced in arclength, starting at sample 0."""
    if m < MIN_SAMPLES:
        raise InvalidArgument(f"resample count must be >= {MIN_SAMPLES}, got {m}")
    closed = np.vstack([c.points, c.points[:1]])
    s = np.concatenate([[0.0], np.cumsum(c.segment_lengths())])
    targets = np.arange(m) * (s[-1] / m)
    x = np.interp(targets, s, closed[:, 0])
    y = np.interp(targets, s, closed[:, 1])
    return Contour(np.column_stack([x, y]))


def tangent_field(c: Contour) -> BoundaryVectorField:
    """Unit tangents from centered differences with periodic indexing."""
    t = np.roll(c.points, -1, axis=0) - np.roll(c.points, 1, axis=0)
    norm = np.linalg.norm(t, axis=1)
    if np.any(norm <= GAP_TOL):
        raise DegenerateGeometry(f"zero centered difference at sample {int(np.argmin(norm))}")
    return BoundaryVectorField(t / norm[:, None])


def normal_field(c: Contour) -> BoundaryVectorField:
    """Unit outward normals: centered tangents rotated by -90 degrees."""
    t = tangent_field(c).vectors
    return BoundaryVectorField(np.column_stack([t[:, 1], -t[:, 0]]))


def area(c: Contour) -> float:
    """Shoelace area (positive for valid contours)."""
    return signed_area(c.points)


def boundary_integral(c: Contour, g: BoundaryScalarField) -> float:
    """Trapezoidal quadrature of ``g`` against polyline arclength."""
    values = g.values if isinstance(g, BoundaryScalarField) else np.asarray(g, dtype=float)
    _check_length(c, len(values), "boundary field")
    return float(np.dot(c.quadrature_weights(), values))


def shape_derivative(c: Contour, a: BoundaryScalarField, phi: Callable[[np.ndarray], np.ndarray]) -> float:
    """Rate of change of the integral of ``phi`` over the interior under normal speed ``a``."""
    _check_length(c, len(a), "normal speed")
    phi_vals = np.asarray(phi(c.points), dtype=float) * np.ones(len(c))
    return boundary_integral(c, BoundaryScalarField(phi_vals * a.values))


def horizontal_project(c: Contour, v: BoundaryVectorField) -> BoundaryScalarField:
    """Normal component of a general boundary deformation field."""
    _check_length(c, len(v), "boundary vector field")
    n = normal_field(c).vectors
    return BoundaryScalarField(np.einsum("ij,ij->i", v.vectors, n))
