"""File formats: contour/field JSON, field CSV dumps, geodesic path directories."""
from __future__ import annotations

import csv
import json
import re
from pathlib import Path

import numpy as np

from .contour import BoundaryScalarField, Contour
from .errors import DegenerateGeometry, FormatError, InvalidArgument
from .tangent import TangentDecomposition, TangentVector


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def contour_to_json(c: Contour) -> dict:
    return {"points": [[float(x), float(y)] for x, y in c.points]}


def write_contour(c: Contour, path) -> None:
    Path(path).write_text(_dump(contour_to_json(c)))


def read_contour(path) -> Contour:
    """Load ``{"points": [[x, y], ...]}``; the contour must be valid and CCW."""
    try:
        data = json.loads(Path(path).read_text())
        pts = np.asarray(data["points"], dtype=float)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"{path}: not a contour file ({exc})") from exc
    try:
        return Contour(pts)
    except (DegenerateGeometry, InvalidArgument) as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_field(g: BoundaryScalarField, path) -> None:
    Path(path).write_text(_dump({"values": [float(v) for v in g.values]}))


def read_field(path, n: int | None = None) -> BoundaryScalarField:
    try:
        data = json.loads(Path(path).read_text())
        values = np.asarray(data["values"], dtype=float).reshape(-1)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"{path}: not a boundary field file ({exc})") from exc
    if n is not None and len(values) != n:
        raise FormatError(f"{path}: {len(values)} values, expected {n}")
    return BoundaryScalarField(values)


def write_tangent_csv(alpha: TangentVector, potential_path, gradient_path) -> None:
    """``vertex,x,y,u,S`` and ``triangle,cx,cy,gx,gy`` tables."""
    m = alpha.mesh
    with open(potential_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["vertex", "x", "y", "u", "S"])
        for i, ((x, y), u) in enumerate(zip(m.vertices, alpha.potential.values)):
            w.writerow([i, repr(float(x)), repr(float(y)), repr(float(u)), repr(float(alpha.div_constant))])
    with open(gradient_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["triangle", "cx", "cy", "gx", "gy"])
        for k, ((cx, cy), (gx, gy)) in enumerate(zip(m.centroids, alpha.grad.values)):
            w.writerow([k, repr(float(cx)), repr(float(cy)), repr(float(gx)), repr(float(gy))])


def write_decomposition(d: TangentDecomposition, path) -> None:
    Path(path).write_text(_dump(d.report()))


# ---------------------------------------------------------------- path directories

_STEP = re.compile(r"contour_(\d{4,})\.json$")


def write_json(obj, path) -> None:
    Path(path).write_text(_dump(obj))


def write_path_dir(directory, times, contours, fields, run_config: dict, summary: dict, diagnostics_rows) -> None:
    """Per-step ``contour_XXXX.json`` / ``field_XXXX.json`` plus ``diagnostics.csv``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    for k, (c, g) in enumerate(zip(contours, fields)):
        write_contour(c, out / f"contour_{k:04d}.json")
        write_field(g, out / f"field_{k:04d}.json")
    write_json({**summary, "times": [float(t) for t in times]}, out / "path.json")
    write_json(run_config, out / "run.json")
    with open(out / "diagnostics.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "t", "length_increment", "continuity_residual", "uniformity_std", "kinetic_norm"])
        for row in diagnostics_rows:
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])


def read_path_dir(directory):
    """Return ``(run_config, summary, times, contours, fields)``; raise FormatError if malformed."""
    d = Path(directory)
    if not d.is_dir():
        raise FormatError(f"{d}: not a directory")
    try:
        summary = json.loads((d / "path.json").read_text())
        run = json.loads((d / "run.json").read_text())
        times = [float(t) for t in summary["times"]]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"{d}: missing or malformed path.json/run.json ({exc})") from exc
    steps = sorted(int(m.group(1)) for p in d.iterdir() if (m := _STEP.match(p.name)))
    if steps != list(range(len(times))):
        raise FormatError(f"{d}: expected contour files 0..{len(times) - 1}, found {len(steps)}")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise FormatError(f"{d}: times are not strictly increasing")
    contours = [read_contour(d / f"contour_{k:04d}.json") for k in steps]
    fields = [read_field(d / f"field_{k:04d}.json", len(c)) for k, c in zip(steps, contours)]
    return run, summary, times, contours, fields


def write_trajectories(particles, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["particle", "step", "t", "x", "y"])
        for s, (t, pos) in enumerate(zip(particles.times, particles.trajectory_history)):
            for i, (x, y) in enumerate(pos):
                w.writerow([i, s, repr(float(t)), repr(float(x)), repr(float(y))])
