#!/usr/bin/env python3
"""Radial kernel table and the point-charge energy study.

Tabulates the Coulomb, Yukawa and bounded-difference kernels, then
shows the two headline energy facts: the truncated Coulomb energy
grows like 1/eps while the bounded kernel's energy stays finite and
approaches 1 / (8 pi a) as the window opens.
"""

import argparse

import numpy as np

from sbpbox.greens import bp_kernel, coulomb, radial_energy, yukawa


def parse_args():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--a", type=float, default=1.0, help="screening length")
    ap.add_argument("--r-max", type=float, default=60.0)
    ap.add_argument("--points", type=int, default=12)
    return ap.parse_args()


def main():
    args = parse_args()
    a, r_max = args.a, args.r_max

    print(f"{'r':>12} {'coulomb':>14} {'yukawa':>14} {'difference':>14}")
    for r in np.geomspace(1e-3 * a, 10.0 * a, args.points):
        print(f"{r:>12.5e} {coulomb(r):>14.6e} {yukawa(r, a):>14.6e} "
              f"{bp_kernel(r, a):>14.6e}")
    print(f"value at the origin: {bp_kernel(0.0, a):.10g} "
          f"(= 1/(4 pi a) = {1.0 / (4.0 * np.pi * a):.10g})")

    print(f"\n{'eps':>10} {'coulomb window':>16} {'bounded kernel':>16}")
    eps_list = [10.0 ** (-k) for k in range(2, 7)]
    for eps in eps_list:
        ec = radial_energy("coulomb", a, eps, r_max, tail=False)
        eb = radial_energy("bp", a, eps, r_max)
        print(f"{eps:>10.0e} {ec:>16.8f} {eb:>16.10f}")
    logs = np.log([radial_energy("coulomb", a, e, r_max, tail=False)
                   for e in eps_list[-3:]])
    slope = np.polyfit(np.log([1.0 / e for e in eps_list[-3:]]), logs, 1)[0]
    print(f"\ncoulomb window growth exponent in 1/eps: {slope:.6f}")
    limit = 1.0 / (8.0 * np.pi * a)
    eb = radial_energy("bp", a, eps_list[-1], r_max)
    print(f"bounded-kernel energy {eb:.10f} vs zero-radius limit {limit:.10f} "
          f"(gap {abs(eb - limit):.3e})")


if __name__ == "__main__":
    main()
