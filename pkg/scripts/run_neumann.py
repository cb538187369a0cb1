#!/usr/bin/env python3
"""Natural-flux run: inhomogeneity, feasibility, solve, multipliers.

Builds boundary flux data from face=value arguments, solves for the
zero-mean inhomogeneity chi, checks its balance constant against the
admissible charge-level range, then minimizes on the constraint set.
The report carries both Lagrange multipliers and the divergence
diagnostic omega - mu alpha.
"""

import argparse
import sys

from sbpbox.charge import two_well_profile
from sbpbox.energy import ProblemSpec
from sbpbox.grid import BoxDomain, make_grid
from sbpbox.manifold import FEASIBLE, validate_alpha
from sbpbox.operators import BoundaryFlux, solve_chi
from sbpbox.reduction import NEUMANN
from sbpbox.solver import SolverOptions, minimize_neumann, verify_solution


def face_data(pairs):
    out = {}
    for item in pairs:
        face, _, value = item.partition("=")
        out[face] = float(value)
    return out


def parse_args():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lengths", type=float, nargs=3, default=[1.0, 1.3, 0.7])
    ap.add_argument("--n", type=int, default=16)
    ap.add_argument("--p", type=float, default=2.6)
    ap.add_argument("--c0", type=float, default=0.0,
                    help="offset of the two-well charge profile")
    ap.add_argument("--h1", action="append", default=None, metavar="FACE=VALUE",
                    help="first-order flux datum, e.g. x1_lo=0.3 (repeatable)")
    ap.add_argument("--h2", action="append", default=None, metavar="FACE=VALUE",
                    help="third-order flux datum, e.g. x2_hi=0.2 (repeatable)")
    ap.add_argument("--tol", type=float, default=1e-8)
    ap.add_argument("--seed", type=int, default=0)
    return ap.parse_args()


def main():
    args = parse_args()
    dom = BoxDomain(tuple(args.lengths))
    grid = make_grid(dom, args.n)
    q = two_well_profile(dom, c0=args.c0)
    h1 = face_data(args.h1) if args.h1 is not None else {"x1_lo": 0.3}
    h2 = face_data(args.h2) if args.h2 is not None else {"x2_hi": 0.2}
    flux = BoundaryFlux(dom, h1=h1, h2=h2)
    chi = solve_chi(flux, grid)
    print(f"flux balance constant alpha = {chi.alpha:.12g}")

    report = validate_alpha(q, chi.alpha, grid)
    print(f"admissible range [{report.q_min:.6g}, {report.q_max:.6g}], "
          f"verdict {report.verdict}")
    if report.verdict != FEASIBLE:
        sys.exit(3)

    spec = ProblemSpec(p=args.p, case=NEUMANN, q=q, chi=chi,
                       alpha=chi.alpha, grid=grid)
    opts = SolverOptions(tol_grad=args.tol, max_iter=5000, seed=args.seed)
    sol = minimize_neumann(spec, opts)
    print(f"\nstatus {sol.status} after {len(sol.trace) - 1} iterations")
    print(f"J      = {sol.J:.12g}")
    print(f"omega  = {sol.omega:.12g}")
    print(f"mu     = {sol.mu:.12g}")
    print(f"omega - mu alpha = {sol.multipliers.divergence_diagnostic(spec.alpha):.12g}")
    print(f"constraint residuals: sphere {sol.residual_sphere:.3e}, "
          f"charge {sol.residual_charge:.3e}")
    print("\nverification:")
    print(verify_solution(sol, spec).summary())
    sys.exit(0 if sol.converged else 2)


if __name__ == "__main__":
    main()
