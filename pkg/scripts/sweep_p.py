#!/usr/bin/env python3
"""Exponent sweep: ground-state scalars across the subcritical range.

One sphere-constrained solve per exponent value, optionally threaded;
results land in a CSV with the energy, the frequency and the solution
norms per row.
"""

import argparse
import csv
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from sbpbox.charge import two_well_profile
from sbpbox.energy import ProblemSpec
from sbpbox.grid import BoxDomain, make_grid, norm_bih, norm_h10, norm_l2
from sbpbox.reduction import NAVIER
from sbpbox.solver import SolverOptions, minimize_navier


def parse_args():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--values", type=float, nargs="+",
                    default=[2.2, 2.4, 2.6, 2.8, 3.0, 3.2])
    ap.add_argument("--lengths", type=float, nargs=3, default=[1.0, 1.3, 0.7])
    ap.add_argument("--n", type=int, default=12)
    ap.add_argument("--c0", type=float, default=0.4)
    ap.add_argument("--tol", type=float, default=1e-8)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--parallel", type=int, default=1)
    ap.add_argument("--out", default="sweep_p.csv")
    return ap.parse_args()


def main():
    args = parse_args()
    dom = BoxDomain(tuple(args.lengths))
    grid = make_grid(dom, args.n)
    q = two_well_profile(dom, c0=args.c0)
    opts = SolverOptions(tol_grad=args.tol, max_iter=5000, seed=args.seed)

    def point(p):
        spec = ProblemSpec(p=p, case=NAVIER, q=q, grid=grid)
        sol = minimize_navier(spec, opts)
        return {
            "p": p, "J": sol.J, "omega": sol.omega,
            "norm_u_h1": float(np.hypot(norm_h10(sol.u), norm_l2(sol.u))),
            "norm_phi": norm_bih(sol.phi_reduced),
            "iterations": len(sol.trace) - 1, "status": sol.status,
        }

    if args.parallel > 1:
        with ThreadPoolExecutor(max_workers=args.parallel) as pool:
            rows = list(pool.map(point, args.values))
    else:
        rows = [point(p) for p in args.values]
    rows.sort(key=lambda r: r["p"])

    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    for r in rows:
        print(f"p={r['p']:<5} J={r['J']:>16.10f} omega={r['omega']:>16.10f} "
              f"({r['iterations']} iters, {r['status']})")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
