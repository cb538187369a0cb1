"""Radial kernels and their field energies."""

import numpy as np
import pytest
from scipy import integrate

from sbpbox.exceptions import InvalidParameter, SingularPoint
from sbpbox.greens import (bp_kernel, coulomb, factorization_residual,
                           radial_energy, yukawa)

FOUR_PI = 4.0 * np.pi


def test_kernel_point_values():
    assert coulomb(1.0) == pytest.approx(1.0 / FOUR_PI, rel=1e-15)
    assert coulomb(0.25) == pytest.approx(1.0 / np.pi, rel=1e-15)
    assert yukawa(1.0, 1.0) == pytest.approx(np.exp(-1.0) / FOUR_PI, rel=1e-15)
    assert bp_kernel(1.0, 1.0) == pytest.approx((1.0 - np.exp(-1.0)) / FOUR_PI,
                                                rel=1e-15)


def test_difference_identity():
    r = np.geomspace(1e-3, 30.0, 40)
    for a in (0.5, 1.0, 2.0):
        assert np.allclose(bp_kernel(r, a), coulomb(r) - yukawa(r, a),
                           rtol=1e-12, atol=1e-18)


def test_bp_kernel_bounded_at_origin():
    for a in (0.5, 1.0, 3.0):
        assert bp_kernel(0.0, a) == pytest.approx(1.0 / (FOUR_PI * a), rel=1e-15)
    # series branch agrees with the direct formula across the switch
    a = 1.0
    r = np.array([0.3e-6, 0.9e-6, 1.1e-6, 3e-6])
    direct = -np.expm1(-r / a) / (FOUR_PI * r)
    assert np.allclose(bp_kernel(r, a), direct, rtol=1e-12)


def test_kernel_scaling_relation():
    # K(r; a) = K(r/a; 1) / a
    r = np.geomspace(1e-4, 10.0, 25)
    for a in (0.3, 2.7):
        assert np.allclose(bp_kernel(r, a), bp_kernel(r / a, 1.0) / a, rtol=1e-13)


def test_kernel_monotone_decreasing():
    r = np.linspace(1e-3, 20.0, 400)
    v = bp_kernel(r, 1.0)
    assert np.all(np.diff(v) < 0.0)
    assert v[0] < 1.0 / FOUR_PI


def test_singularity_and_argument_checks():
    with pytest.raises(SingularPoint):
        coulomb(0.0)
    with pytest.raises(SingularPoint):
        yukawa(np.array([1.0, 0.0]), 1.0)
    with pytest.raises(InvalidParameter):
        bp_kernel(-1.0, 1.0)
    with pytest.raises(InvalidParameter):
        yukawa(1.0, 0.0)
    with pytest.raises(InvalidParameter):
        radial_energy("bp", 1.0, 1.0, 0.5)
    with pytest.raises(InvalidParameter):
        radial_energy("unknown-kernel", 1.0, 1e-3, 10.0)
    with pytest.raises(SingularPoint):
        factorization_residual(1.0, 1e-5)


def test_coulomb_energy_window():
    # (1/2) int_eps^R |G'|^2 4 pi r^2 dr = (1/(8 pi)) (1/eps - 1/R)
    for eps, r_max in ((1e-3, 10.0), (1e-2, 50.0)):
        expect = (1.0 / eps - 1.0 / r_max) / (8.0 * np.pi)
        got = radial_energy("coulomb", 1.0, eps, r_max, tail=False)
        assert got == pytest.approx(expect, rel=1e-9)


def test_coulomb_tail_closure_removes_window_dependence():
    # adding the monopole far field makes the total exactly 1/(8 pi eps)
    eps = 1e-3
    for r_max in (5.0, 50.0, 500.0):
        got = radial_energy("coulomb", 1.0, eps, r_max, tail=True)
        assert got == pytest.approx(1.0 / (8.0 * np.pi * eps), rel=1e-9)


def test_coulomb_energy_eps_scaling():
    # log-slope of the energy against eps is -1 within 5 percent
    e1 = radial_energy("coulomb", 1.0, 1e-3, 20.0, tail=False)
    e2 = radial_energy("coulomb", 1.0, 1e-4, 20.0, tail=False)
    slope = np.log(e2 / e1) / np.log(1e-4 / 1e-3)
    assert abs(slope + 1.0) < 0.05


def test_bp_energy_finite_and_stable():
    # the bounded kernel has a finite eps -> 0 limit and is insensitive
    # to both window ends once they are extreme
    a = 1.0
    e_ref = radial_energy("bp", a, 1e-6, 60.0)
    e_smaller_eps = radial_energy("bp", a, 1e-8, 60.0)
    e_larger_box = radial_energy("bp", a, 1e-6, 120.0)
    # the density is O(1) at the origin, so shrinking eps moves the
    # value only linearly in eps
    assert abs(e_ref - e_smaller_eps) < 1e-6
    assert e_ref == pytest.approx(e_larger_box, rel=1e-10)
    assert 0.0 < e_ref < 1.0 / (8.0 * np.pi * 1e-6)


def test_bp_energy_closed_form():
    # independent check: integrate the closed-form density with a direct
    # quadrature on linear radius, piecewise across scales
    a = 1.0

    def density(r):
        kp = (np.exp(-r / a) * (1 + r / a) - 1.0) / (FOUR_PI * r**2)
        lap = -np.exp(-r / a) / (FOUR_PI * r * a**2)
        return FOUR_PI * r**2 * (0.5 * kp**2 + 0.5 * a**2 * lap**2)

    total = 0.0
    edges = [1e-6, 1e-3, 1e-1, 1.0, 10.0, 60.0]
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(density, lo, hi, limit=200)
        total += val
    k_tail = bp_kernel(60.0, a)
    total += (FOUR_PI * 60.0 * k_tail) ** 2 / (8.0 * np.pi * 60.0)
    assert radial_energy("bp", a, 1e-6, 60.0) == pytest.approx(total, rel=1e-8)


def test_callable_kernel_matches_named():
    a = 1.0
    named = radial_energy("yukawa", a, 1e-2, 40.0)
    numeric = radial_energy(lambda r: yukawa(r, a), a, 1e-2, 40.0)
    assert numeric == pytest.approx(named, rel=1e-6)


def test_factorization_residual_orders():
    # fourth-order operator annihilates the bounded kernel; the nested
    # second-order stencils converge at second order
    a = 1.0
    r = 1.5
    res_h = factorization_residual(a, r, step=0.08)
    res_h2 = factorization_residual(a, r, step=0.04)
    ratio = res_h / res_h2
    assert 3.3 < ratio < 4.7
    # -Laplace G = 0 away from the origin, exactly for the second-order
    # stencil because G is a Laurent monomial
    assert factorization_residual(a, r, step=0.05, kernel="coulomb") < 1e-13


def test_factorization_residual_argument_checks():
    with pytest.raises(InvalidParameter):
        factorization_residual(1.0, 0.5, step=0.3)
    with pytest.raises(InvalidParameter):
        factorization_residual(1.0, 1.0, kernel="bessel")
