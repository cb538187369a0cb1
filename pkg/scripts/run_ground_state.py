#!/usr/bin/env python3
"""Coupled ground state across grid sizes, with a refinement table.

Solves the sphere-constrained problem for the built-in two-well charge
profile at each requested resolution and prints how the energy, the
frequency and the potential norm settle down.  A final verification
summary recomputes every residual at the finest level.
"""

import argparse

from sbpbox.charge import two_well_profile
from sbpbox.energy import ProblemSpec
from sbpbox.grid import BoxDomain, make_grid, norm_bih
from sbpbox.reduction import NAVIER
from sbpbox.solver import SolverOptions, minimize_navier, verify_solution


def parse_args():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lengths", type=float, nargs=3, default=[1.0, 1.3, 0.7],
                    help="box edge lengths")
    ap.add_argument("--n", type=int, nargs="+", default=[8, 12, 16, 24],
                    help="modes per axis, one solve per value")
    ap.add_argument("--p", type=float, default=2.6)
    ap.add_argument("--c0", type=float, default=0.4,
                    help="offset of the two-well charge profile")
    ap.add_argument("--tol", type=float, default=1e-8)
    ap.add_argument("--seed", type=int, default=0)
    return ap.parse_args()


def main():
    args = parse_args()
    dom = BoxDomain(tuple(args.lengths))
    q = two_well_profile(dom, c0=args.c0)
    opts = SolverOptions(tol_grad=args.tol, max_iter=5000, seed=args.seed)
    print(f"{'n':>4} {'J':>18} {'omega':>18} {'|phi|':>12} {'iters':>6} status")
    history = []
    for n in args.n:
        spec = ProblemSpec(p=args.p, case=NAVIER, q=q, grid=make_grid(dom, n))
        sol = minimize_navier(spec, opts)
        history.append((n, sol, spec))
        print(f"{n:>4} {sol.J:>18.12f} {sol.omega:>18.12f} "
              f"{norm_bih(sol.phi_reduced):>12.6f} {len(sol.trace) - 1:>6} "
              f"{sol.status}")
    if len(history) > 1:
        print("\nrefinement differences against the finest level:")
        _, fine, _ = history[-1]
        for n, sol, _ in history[:-1]:
            print(f"  n={n:<3} dJ={abs(sol.J - fine.J):.3e}  "
                  f"domega={abs(sol.omega - fine.omega):.3e}")
    n, sol, spec = history[-1]
    print(f"\nverification at n={n}:")
    print(verify_solution(sol, spec).summary())


if __name__ == "__main__":
    main()
