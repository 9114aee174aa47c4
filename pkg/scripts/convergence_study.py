"""Mesh refinement study for the Poisson solvers and the lift round trip.

Prints a table of L-infinity errors against closed-form solutions on the unit
disk and the observed convergence order between consecutive mesh sizes.
"""
import argparse

import numpy as np

from shapeflow.shapes import circle, parse_field
from shapeflow.mesh import triangulate
from shapeflow.poisson import solve_dirichlet, solve_neumann
from shapeflow.tangent import delift, lift


def run(sizes, samples):
    rows = []
    for h in sizes:
        n = samples or int(round(2 * np.pi / h))
        c = circle(1.0, n)
        m = triangulate(c, h)
        r2 = np.einsum("vd,vd->v", m.vertices, m.vertices)
        neu = np.max(np.abs(solve_neumann(m, np.ones(n)).values - (r2 / 2 - 0.25)))
        dir_ = np.max(np.abs(solve_dirichlet(m, 1.0).values - (r2 - 1) / 4))
        a = parse_field("cos:3", c)
        rt = np.max(np.abs(delift(c, lift(c, a, mesh=m)).values - a.values))
        rows.append((h, m.n_vertices, neu, dir_, rt))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=float, nargs="+", default=[0.2, 0.1, 0.05, 0.025])
    ap.add_argument("--samples", type=int, default=None, help="boundary samples (default 2*pi/h)")
    args = ap.parse_args(argv)
    rows = run(args.sizes, args.samples)
    print(f"{'h':>7} {'verts':>7} {'neumann':>10} {'order':>6} {'dirichlet':>10} {'order':>6} {'roundtrip':>10} {'order':>6}")
    prev = None
    for row in rows:
        h, nv, errs = row[0], row[1], row[2:]
        orders = ["" if prev is None else f"{np.log(p / e) / np.log(prev[0] / h):.2f}" for e, p in zip(errs, prev[2:] if prev else errs)]
        cells = " ".join(f"{e:10.2e} {o:>6}" for e, o in zip(errs, orders))
        print(f"{h:7.3f} {nv:7d} {cells}")
        prev = row


if __name__ == "__main__":
    main()
