"""``shapeflow`` command-line interface.

Exit codes: 0 success, 1 numerical failure, 2 usage or format error,
3 geodesic breakdown (partial output is still written).
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import io, svg
from .contour import area
from .dynamics import (
    DEFAULT_RELIFT_EVERY,
    GeodesicPath,
    chord_deviation,
    density_uniformity,
    hessian_departure,
    lifted_path,
    shoot_geodesic,
    verify_continuity,
)
from .errors import (
    FormatError,
    IncompatibleData,
    InvalidArgument,
    MeshQualityFailure,
    ShapeflowError,
    SolverFailure,
)
from .mesh import default_mesh_size, triangulate
from .shapes import GENERATORS, parse_field
from .tangent import decompose, delift, lift_on_mesh

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE, EXIT_BREAKDOWN = 0, 1, 2, 3

logger = logging.getLogger("shapeflow")

_GEODESIC_EPILOG = """\
output directory:
  contour_XXXX.json  contour at step XXXX ({"points": [[x, y], ...]})
  field_XXXX.json    normal speed of the tangent vector ({"values": [...]})
  path.json          summary: status, length, times, hessian_departure, ...
  run.json           echo of the run configuration
  diagnostics.csv    step,t,length_increment,continuity_residual,uniformity_std,kinetic_norm
  trajectories.csv   particle,step,t,x,y (with --trajectories)
  filmstrip.svg, overlay.svg, trajectories.svg
"""

_LIFT_EPILOG = """\
output directory:
  potential.csv  vertex,x,y,u,S  (nodal potential and divergence constant)
  gradient.csv   triangle,cx,cy,gx,gy  (per-triangle flow field)
  lift.svg       potential shading, contour and flow arrows
  run.json       echo of the run configuration
"""

_VERIFY_EPILOG = """\
writes verify.csv in the path directory (or --output):
  step,t,continuity_residual,uniformity_std,divergence_std,pass
exit status 0 iff every residual is below its threshold, 1 otherwise.
"""


@dataclass
class RunConfig:
    """Validated echo of a command invocation (written as run.json)."""

    command: str
    inputs: dict = field(default_factory=dict)
    output: str = ""
    params: dict = field(default_factory=dict)
    render: dict = field(default_factory=dict)

    def __post_init__(self):
        for group in (self.params, self.render):
            for key, value in group.items():
                if isinstance(value, (int, float)) and not isinstance(value, bool) and not value > 0:
                    raise InvalidArgument(f"--{key.replace('_', '-')} must be strictly positive, got {value}")
        for key, value in self.inputs.items():
            if key != "field" and value is not None and not Path(value).exists():
                raise FormatError(f"{value}: no such file or directory")

    def as_dict(self) -> dict:
        return asdict(self)


def _positive(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (np.isfinite(value) and value > 0):
        raise argparse.ArgumentTypeError(f"must be a positive number, got {text}")
    return value


def _count(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _render_options(p: argparse.ArgumentParser):
    p.add_argument("--width", type=_positive, default=480.0, help="SVG width in px")
    p.add_argument("--stroke", type=_positive, default=1.5, help="contour stroke width in px")
    p.add_argument("--arrow-scale", type=_positive, default=0.15, help="arrow length per unit speed")


def _render_dict(args) -> dict:
    return {"width": args.width, "stroke": args.stroke, "arrow_scale": args.arrow_scale}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shapeflow", description="Shape-measure flows on planar contours.")
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a sampled contour as JSON")
    g.add_argument("kind", choices=sorted(GENERATORS))
    g.add_argument("--samples", type=_count, default=128, help="number of contour samples N")
    g.add_argument("--radius", type=_positive, default=1.0)
    g.add_argument("--semi-axes", type=_positive, nargs=2, default=(2.0, 1.0), metavar=("A", "B"), help="ellipse")
    g.add_argument("--amplitude", type=float, default=0.3, help="star lambda (requires lambda/k < 1)")
    g.add_argument("--lobes", type=_count, default=5, help="star frequency k")
    g.add_argument("--bump-height", type=float, default=0.3, help="relative Gaussian bump height")
    g.add_argument("--bump-width", type=_positive, default=0.35, help="Gaussian bump width in radians")
    g.add_argument("--bump-angle", type=float, default=0.0, help="bump centre angle in radians")
    g.add_argument("--output", required=True, help="contour JSON path")

    for name, helptext, epilog in (
        ("lift", "lift a normal speed to a flow field", _LIFT_EPILOG),
        ("decompose", "split a lifted field into translation, scale and deformation", None),
    ):
        p = sub.add_parser(name, help=helptext, epilog=epilog, formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--contour", required=True, help="contour JSON")
        p.add_argument("--field", required=True, help='normal speed spec, e.g. "const:1+cos:2" or "file:a.json"')
        p.add_argument("--mesh-size", type=_positive, default=None, help="interior mesh size h (default perimeter/N)")
        p.add_argument("--output", required=True, help="output directory")
        if name == "lift":
            _render_options(p)

    p = sub.add_parser("geodesic", help="shoot a geodesic", epilog=_GEODESIC_EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--contour", required=True, help="initial contour JSON")
    p.add_argument("--field", required=True, help="initial normal speed spec")
    p.add_argument("--horizon", type=_positive, default=1.0, help="final time T")
    p.add_argument("--steps", type=_count, default=None, help="number of steps (>= 8; default 64)")
    p.add_argument("--dt", type=_positive, default=None, help="time step (alternative to --steps)")
    p.add_argument("--mesh-size", type=_positive, default=None, help="interior mesh size h")
    p.add_argument("--relift-every", type=_count, default=DEFAULT_RELIFT_EVERY, help="constraint re-imposition period")
    p.add_argument("--particles", type=_count, default=200, help="particles for the uniformity check")
    p.add_argument("--trajectories", action="store_true", help="also write trajectories.csv")
    p.add_argument("--output", required=True, help="output directory")
    _render_options(p)

    p = sub.add_parser("verify", help="re-check a stored geodesic path", epilog=_VERIFY_EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("path", help="directory written by 'shapeflow geodesic'")
    p.add_argument("--continuity-tolerance", type=_positive, default=0.1, help="max relative continuity residual (default 0.1)")
    p.add_argument("--uniformity-tolerance", type=_positive, default=None, help="max std of log det J (default 5 (dt + h))")
    p.add_argument("--particles", type=_count, default=200)
    p.add_argument("--output", default=None, help="CSV path (default PATH/verify.csv)")

    p = sub.add_parser("render", help="render contours, a lift or a stored path as SVG")
    p.add_argument("--contour", default=None, help="contour JSON (single contour or lift figure)")
    p.add_argument("--field", default=None, help="with --contour: draw the lift of this speed")
    p.add_argument("--mesh-size", type=_positive, default=None)
    p.add_argument("--path", default=None, help="geodesic directory: filmstrip and overlay")
    p.add_argument("--output", required=True, help="output directory")
    _render_options(p)
    return parser


# --------------------------------------------------------------------------- commands


def _write(path: Path, text: str):
    path.write_text(text)


def cmd_generate(args) -> int:
    kind = args.kind
    if kind == "circle":
        c = GENERATORS[kind](radius=args.radius, n=args.samples)
    elif kind == "ellipse":
        c = GENERATORS[kind](a=args.semi_axes[0], b=args.semi_axes[1], n=args.samples)
    elif kind == "star":
        c = GENERATORS[kind](radius=args.radius, lam=args.amplitude, k=args.lobes, n=args.samples)
    else:
        c = GENERATORS[kind](radius=args.radius, height=args.bump_height, width=args.bump_width, angle=args.bump_angle, n=args.samples)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    io.write_contour(c, out)
    return EXIT_OK


def _load(args):
    c = io.read_contour(args.contour)
    a = parse_field(args.field, c, Path(args.contour).parent)
    h = args.mesh_size if args.mesh_size is not None else default_mesh_size(c)
    return c, a, h


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_lift(args) -> int:
    c, a, h = _load(args)
    cfg = RunConfig("lift", {"contour": args.contour, "field": args.field}, args.output, {"mesh_size": h}, _render_dict(args))
    alpha = lift_on_mesh(triangulate(c, h), c, a)
    out = _outdir(args.output)
    io.write_tangent_csv(alpha, out / "potential.csv", out / "gradient.csv")
    _write(out / "lift.svg", svg.render_lift(c, alpha, args.width, args.stroke, args.arrow_scale))
    io.write_json(cfg.as_dict(), out / "run.json")
    return EXIT_OK


def cmd_decompose(args) -> int:
    c, a, h = _load(args)
    cfg = RunConfig("decompose", {"contour": args.contour, "field": args.field}, args.output, {"mesh_size": h})
    alpha = lift_on_mesh(triangulate(c, h), c, a)
    d = decompose(c, alpha)
    out = _outdir(args.output)
    report = d.report()
    report["total_norm"] = alpha.norm()
    io.write_json(report, out / "decomposition.json")
    io.write_json(cfg.as_dict(), out / "run.json")
    return EXIT_OK


def _steps(args) -> int:
    if args.dt is not None:
        n = int(round(args.horizon / args.dt))
        if args.steps is not None and args.steps != n:
            raise InvalidArgument(f"--steps {args.steps} disagrees with --horizon/--dt = {n}")
        if not np.isclose(n * args.dt, args.horizon, rtol=1e-9):
            raise InvalidArgument("--horizon must be an integer multiple of --dt")
        return n
    return args.steps if args.steps is not None else 64


def _diagnostic_rows(path: GeodesicPath, uniformity_std) -> list:
    norms = path.kinetic_norms()
    rows = []
    for k, t in enumerate(path.times):
        inc = 0.0 if k == 0 else 0.5 * (norms[k] + norms[k - 1]) * (t - path.times[k - 1])
        cont = path.step_diagnostics[k].continuity_residual if path.step_diagnostics else float("nan")
        rows.append((k, t, inc, cont, uniformity_std[k], norms[k]))
    return rows


def cmd_geodesic(args) -> int:
    steps = _steps(args)
    if steps < 8:
        raise InvalidArgument(f"need at least 8 steps, got {steps}")
    c0, a0, h = _load(args)
    params = {
        "horizon": args.horizon,
        "steps": steps,
        "dt": args.horizon / steps,
        "mesh_size": h,
        "relift_every": args.relift_every,
        "particles": args.particles,
    }
    cfg = RunConfig("geodesic", {"contour": args.contour, "field": args.field}, args.output, params, _render_dict(args))
    path = shoot_geodesic(c0, a0, args.horizon, steps, h, relift_every=args.relift_every)

    fields = [a0] + [delift(c, a) for c, a in zip(path.contours[1:], path.potentials[1:])]
    density = density_uniformity(path, args.particles) if len(path.times) > 1 else None
    ustd = density.std if density is not None else np.zeros(len(path.times))
    departures = [hessian_departure(a) for a in path.potentials]
    summary = {
        "status": path.status,
        "message": path.message,
        "length": path.length,
        "mesh_size": h,
        "dt": args.horizon / steps,
        "samples": len(c0),
        "hessian_departure_max": float(max(departures)),
        "areas": [area(c) for c in path.contours],
    }
    if density is not None:
        dev = chord_deviation(density.particles)
        summary["chord_deviation_max"] = float(dev.max())
        summary["log_detJ_mean_final"] = float(density.mean[-1])
    out = _outdir(args.output)
    io.write_path_dir(out, path.times, path.contours, fields, cfg.as_dict(), summary, _diagnostic_rows(path, ustd))
    _write(out / "filmstrip.svg", svg.render_filmstrip(path.contours, width=2 * args.width, stroke=args.stroke))
    _write(out / "overlay.svg", svg.render_overlay(path.contours, args.width, args.stroke))
    if density is not None:
        traj = np.stack(density.particles.trajectory_history)
        _write(out / "trajectories.svg", svg.render_trajectories(path.contours, traj, args.width, args.stroke))
        if args.trajectories:
            io.write_trajectories(density.particles, out / "trajectories.csv")
    if not path.ok:
        print(f"shapeflow: geodesic breakdown: {path.message}", file=sys.stderr)
        return EXIT_BREAKDOWN
    return EXIT_OK


def cmd_verify(args) -> int:
    run, summary, times, contours, fields = io.read_path_dir(args.path)
    try:
        h = float(summary["mesh_size"])
        dt = float(summary["dt"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{args.path}: path.json lacks mesh_size/dt ({exc})") from exc
    if len(times) < 3:
        raise FormatError(f"{args.path}: need at least 3 samples to verify, found {len(times)}")
    path = lifted_path(contours, fields, times, h)
    cont = verify_continuity(path).max_relative()
    density = density_uniformity(path, args.particles)
    divstd = [a.divergence_deviation() for a in path.potentials]
    cont_tol = args.continuity_tolerance
    unif_tol = args.uniformity_tolerance if args.uniformity_tolerance is not None else 5 * (dt + h)
    ok_all = True
    lines = ["step,t,continuity_residual,uniformity_std,divergence_std,pass"]
    for k, t in enumerate(times):
        ok = (np.isnan(cont[k]) or cont[k] <= cont_tol) and density.std[k] <= unif_tol and path.potentials[k].satisfies_constant_divergence()
        ok_all &= bool(ok)
        lines.append(f"{k},{t!r},{float(cont[k])!r},{float(density.std[k])!r},{float(divstd[k])!r},{int(ok)}")
    target = Path(args.output) if args.output else Path(args.path) / "verify.csv"
    target.write_text("\n".join(lines) + "\n")
    worst = float(np.nanmax(cont)) if np.any(np.isfinite(cont)) else 0.0
    print(
        f"{'PASS' if ok_all else 'FAIL'} continuity max {worst:.3e} (tol {cont_tol:g}), "
        f"uniformity max {float(density.std.max()):.3e} (tol {unif_tol:g})"
    )
    return EXIT_OK if ok_all else EXIT_NUMERIC


def cmd_render(args) -> int:
    if (args.contour is None) == (args.path is None):
        raise InvalidArgument("give exactly one of --contour or --path")
    out = _outdir(args.output)
    if args.path is not None:
        _, _, _, contours, _ = io.read_path_dir(args.path)
        _write(out / "filmstrip.svg", svg.render_filmstrip(contours, width=2 * args.width, stroke=args.stroke))
        _write(out / "overlay.svg", svg.render_overlay(contours, args.width, args.stroke))
    elif args.field is not None:
        c, a, h = _load(args)
        alpha = lift_on_mesh(triangulate(c, h), c, a)
        _write(out / "lift.svg", svg.render_lift(c, alpha, args.width, args.stroke, args.arrow_scale))
    else:
        c = io.read_contour(args.contour)
        _write(out / "contour.svg", svg.render_overlay([c], args.width, args.stroke))
    cfg = RunConfig("render", {"contour": args.contour, "field": args.field, "path": args.path}, args.output, {}, _render_dict(args))
    io.write_json(cfg.as_dict(), out / "run.json")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "lift": cmd_lift,
    "decompose": cmd_decompose,
    "geodesic": cmd_geodesic,
    "verify": cmd_verify,
    "render": cmd_render,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (FormatError, InvalidArgument, IncompatibleData) as exc:
        print(f"shapeflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverFailure, MeshQualityFailure, ShapeflowError, ArithmeticError) as exc:
        print(f"shapeflow: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
