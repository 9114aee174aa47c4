"""Shape generators and the boundary-field spec mini-language.

Field specs are sums of terms joined by ``+``::

    const:v    constant v
    cos:k      cos(k * theta)
    sin:k      sin(k * theta)
    file:path  values from a {"values": [...]} JSON file

``theta`` is the normalised arclength angle of each sample (the polar angle
for an equispaced circle sampled from angle 0). A term may carry a leading
coefficient, e.g. ``0.5*cos:2``.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .contour import BoundaryScalarField, Contour, resample_arclength
from .errors import InvalidArgument

_DENSE = 4096


def _from_radius(r_of_theta, n: int, center=(0.0, 0.0)) -> Contour:
    th = 2 * np.pi * np.arange(_DENSE) / _DENSE
    r = r_of_theta(th)
    dense = Contour(np.column_stack([r * np.cos(th), r * np.sin(th)]) + np.asarray(center, dtype=float))
    return resample_arclength(dense, n)


def circle(radius: float = 1.0, n: int = 128, center=(0.0, 0.0)) -> Contour:
    """Equispaced circle starting at angle 0 (exact sample positions)."""
    if radius <= 0:
        raise InvalidArgument("radius must be positive")
    th = 2 * np.pi * np.arange(n) / n
    return Contour(radius * np.column_stack([np.cos(th), np.sin(th)]) + np.asarray(center, dtype=float))


def ellipse(a: float = 2.0, b: float = 1.0, n: int = 128, center=(0.0, 0.0)) -> Contour:
    if a <= 0 or b <= 0:
        raise InvalidArgument("semi-axes must be positive")
    th = 2 * np.pi * np.arange(_DENSE) / _DENSE
    dense = Contour(np.column_stack([a * np.cos(th), b * np.sin(th)]) + np.asarray(center, dtype=float))
    return resample_arclength(dense, n)


def star(radius: float = 1.0, lam: float = 0.3, k: int = 5, n: int = 128) -> Contour:
    """``r(theta) = R * (1 + lam / k * sin(k * theta))``."""
    if radius <= 0 or k < 1:
        raise InvalidArgument("star needs radius > 0 and k >= 1")
    if not abs(lam) / k < 1:
        raise InvalidArgument("star amplitude lam/k must be below 1 (amplitude < radius)")
    return _from_radius(lambda th: radius * (1 + lam / k * np.sin(k * th)), n)


def bump(radius: float = 1.0, height: float = 0.3, width: float = 0.35, angle: float = 0.0, n: int = 128) -> Contour:
    """Circle with one Gaussian radial bump centred at ``angle``."""
    if radius <= 0 or width <= 0 or height <= -1:
        raise InvalidArgument("bump needs radius > 0, width > 0, height > -1")

    def r(th):
        d = np.angle(np.exp(1j * (th - angle)))
        return radius * (1 + height * np.exp(-0.5 * (d / width) ** 2))

    return _from_radius(r, n)


GENERATORS = {"circle": circle, "ellipse": ellipse, "star": star, "bump": bump}


def parse_field(spec: str, c: Contour, base_dir: Path | None = None) -> BoundaryScalarField:
    """Evaluate a field spec on the samples of ``c``."""
    theta = c.reference_angle()
    total = np.zeros(len(c))
    terms = [t.strip() for t in spec.split("+")]
    if not spec.strip() or any(not t for t in terms):
        raise InvalidArgument(f"empty term in field spec {spec!r}")
    for term in terms:
        coef = 1.0
        if "*" in term:
            head, term = term.split("*", 1)
            coef = _number(head, spec)
        kind, _, arg = term.partition(":")
        kind = kind.strip()
        if kind == "const":
            total += coef * _number(arg, spec)
        elif kind in ("cos", "sin"):
            k = _number(arg, spec)
            total += coef * (np.cos(k * theta) if kind == "cos" else np.sin(k * theta))
        elif kind == "file":
            path = Path(arg)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            values = load_field_values(path)
            if len(values) != len(c):
                raise InvalidArgument(f"{path}: {len(values)} values for {len(c)} contour samples")
            total += coef * values
        else:
            raise InvalidArgument(f"unknown field term {term!r} in {spec!r}")
    return BoundaryScalarField(total)


def _number(text: str, spec: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise InvalidArgument(f"bad number {text!r} in field spec {spec!r}") from None


def load_field_values(path) -> np.ndarray:
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict) or "values" not in data:
        raise InvalidArgument(f"{path}: expected an object with a 'values' list")
    return np.asarray(data["values"], dtype=float)
