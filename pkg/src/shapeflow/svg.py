"""Self-contained SVG renderings: lifted fields, filmstrips, particle trajectories."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contour import Contour
from .tangent import TangentVector

_PALETTE = np.array([[68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37]], dtype=float)


def _color(t: float) -> str:
    t = float(np.clip(t, 0.0, 1.0)) * (len(_PALETTE) - 1)
    i = min(int(t), len(_PALETTE) - 2)
    rgb = _PALETTE[i] + (t - i) * (_PALETTE[i + 1] - _PALETTE[i])
    return "#%02x%02x%02x" % tuple(int(round(v)) for v in rgb)


@dataclass
class View:
    """Maps world coordinates into an SVG canvas (y axis flipped)."""

    lo: np.ndarray
    scale: float
    height: float
    pad: float = 10.0

    @classmethod
    def fit(cls, points, width: float, height: float, pad: float = 10.0) -> "View":
        pts = np.asarray(points, dtype=float)
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        span = np.maximum(hi - lo, 1e-12)
        scale = min((width - 2 * pad) / span[0], (height - 2 * pad) / span[1])
        return cls(lo, scale, height, pad)

    def __call__(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        x = self.pad + (p[..., 0] - self.lo[0]) * self.scale
        y = self.height - self.pad - (p[..., 1] - self.lo[1]) * self.scale
        return np.stack([x, y], axis=-1)


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def _polyline(pts, closed: bool, style: str) -> str:
    coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
    tag = "polygon" if closed else "polyline"
    return f'<{tag} points="{coords}" style="{style}"/>'


def _document(width: float, height: float, body: list[str]) -> str:
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" height="{_fmt(height)}" '
        f'viewBox="0 0 {_fmt(width)} {_fmt(height)}">\n'
        f'<rect x="0" y="0" width="{_fmt(width)}" height="{_fmt(height)}" style="fill:#ffffff"/>\n'
    )
    return head + "\n".join(body) + "\n</svg>\n"


def _arrow(p, q, style: str) -> str:
    d = q - p
    length = float(np.hypot(*d))
    if length < 1e-9:
        return ""
    u = d / length
    head = min(6.0, 0.4 * length)
    left = q - head * u + 0.5 * head * np.array([-u[1], u[0]])
    right = q - head * u - 0.5 * head * np.array([-u[1], u[0]])
    return (
        f'<line x1="{_fmt(p[0])}" y1="{_fmt(p[1])}" x2="{_fmt(q[0])}" y2="{_fmt(q[1])}" style="{style}"/>'
        f'<polygon points="{_fmt(q[0])},{_fmt(q[1])} {_fmt(left[0])},{_fmt(left[1])} {_fmt(right[0])},{_fmt(right[1])}" '
        f'style="fill:#202020;stroke:none"/>'
    )


def render_lift(
    c: Contour,
    alpha: TangentVector,
    width: float = 480.0,
    stroke: float = 1.5,
    arrow_scale: float = 0.15,
    n_arrows: int = 150,
) -> str:
    """Potential shading, contour and gradient arrows (arrow length ``arrow_scale`` per unit speed)."""
    m = alpha.mesh
    view = View.fit(m.vertices, width, width)
    body = []
    u = alpha.potential.values[m.triangles].mean(axis=1)
    lo, hi = float(u.min()), float(u.max())
    span = hi - lo if hi > lo else 1.0
    for tri, val in zip(m.triangles, u):
        col = _color((val - lo) / span)
        body.append(_polyline(view(m.vertices[tri]), True, f"fill:{col};stroke:{col};stroke-width:0.3"))
    body.append(_polyline(view(c.points), True, f"fill:none;stroke:#000000;stroke-width:{stroke}"))
    picks = np.linspace(0, m.n_triangles - 1, min(n_arrows, m.n_triangles)).round().astype(int)
    for k in picks:
        p = m.centroids[k]
        q = p + arrow_scale * alpha.grad.values[k]
        body.append(_arrow(view(p), view(q), "stroke:#202020;stroke-width:1"))
    return _document(width, width, body)


def render_filmstrip(contours: list[Contour], width: float = 900.0, stroke: float = 1.5, panels: int = 6) -> str:
    """Row of panels on a common scale, one contour each."""
    picks = np.linspace(0, len(contours) - 1, min(panels, len(contours))).round().astype(int)
    allpts = np.concatenate([contours[k].points for k in picks])
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    panel_w = width / len(picks)
    panel_h = panel_w * span[1] / span[0] if span[0] > 0 else panel_w
    body = []
    for j, k in enumerate(picks):
        view = View(lo, min((panel_w - 20) / span[0], (panel_h - 20) / span[1]), panel_h)
        pts = view(contours[k].points) + np.array([j * panel_w, 0.0])
        body.append(_polyline(pts, True, f"fill:#d9e6f2;stroke:#1f3b73;stroke-width:{stroke}"))
    return _document(width, panel_h, body)


def render_overlay(contours: list[Contour], width: float = 480.0, stroke: float = 1.2) -> str:
    """All contours on one canvas, coloured by time."""
    allpts = np.concatenate([c.points for c in contours])
    view = View.fit(allpts, width, width)
    n = max(len(contours) - 1, 1)
    body = [
        _polyline(view(c.points), True, f"fill:none;stroke:{_color(k / n)};stroke-width:{stroke}")
        for k, c in enumerate(contours)
    ]
    return _document(width, width, body)


def render_trajectories(contours: list[Contour], trajectories: np.ndarray, width: float = 480.0, stroke: float = 1.5) -> str:
    """First/last contours with particle paths; ``trajectories`` has shape (steps, P, 2)."""
    allpts = np.concatenate([contours[0].points, contours[-1].points, trajectories.reshape(-1, 2)])
    view = View.fit(allpts, width, width)
    body = [
        _polyline(view(contours[0].points), True, f"fill:none;stroke:#1f3b73;stroke-width:{stroke}"),
        _polyline(view(contours[-1].points), True, f"fill:none;stroke:#b22222;stroke-width:{stroke}"),
    ]
    for p in range(trajectories.shape[1]):
        body.append(_polyline(view(trajectories[:, p]), False, "fill:none;stroke:#404040;stroke-width:0.7"))
    return _document(width, width, body)
