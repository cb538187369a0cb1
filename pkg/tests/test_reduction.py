"""The potential map u -> Phi(u) and its variational identities."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import eval_cosine_field, eval_sine_field, gl_rule_3d, quad3
from sbpbox.charge import separable_cosine_profile, two_well_profile
from sbpbox.exceptions import (DegenerateInput, InvalidParameter,
                               UnsupportedClass)
from sbpbox.grid import (DIRICHLET_SINE, NEUMANN_COSINE, BoxDomain,
                         field_from_coeffs, make_grid, norm_bih,
                         random_band_field, zero_field)
from sbpbox.operators import apply_operator
from sbpbox.reduction import (NAVIER, NEUMANN, charge_density_coeffs,
                              coupling_integral, e_functional, phi_bound_ratio,
                              reduce, reduce_dirichlet, reduce_neumann,
                              reduction_identity_residual)


def eval_profile(q, nodes):
    return q.eval_on(nodes)


def test_charge_density_matches_quadrature(grid8, box, rng):
    # exact trigonometric projection of q u^2 against brute-force
    # Gauss-Legendre projection
    q = two_well_profile(box)
    u = random_band_field(grid8, DIRICHLET_SINE, rng)
    band = 10
    dens = charge_density_coeffs(u, q, band)
    nodes, w3 = gl_rule_3d(box.lengths, 32)
    uv = eval_sine_field(u.coeffs, box.lengths, nodes)
    qv = eval_profile(q, nodes)
    target = qv * uv**2
    # project onto one cosine mode at a time (weights: L per zero mode,
    # L/2 otherwise)
    for mode in ((0, 0, 0), (1, 0, 0), (2, 1, 3), (0, 4, 2)):
        test_vals = np.ones_like(target)
        weight = 1.0
        for ax, (b, L) in enumerate(zip(mode, box.lengths)):
            x = nodes[ax]
            shape = [1, 1, 1]
            shape[ax] = -1
            test_vals = test_vals * np.cos(b * np.pi * x / L).reshape(shape)
            weight *= L if b == 0 else L / 2.0
        proj = quad3(target * test_vals, w3) / weight
        assert dens[mode] == pytest.approx(proj, abs=1e-12 * (1 + abs(proj)))


def test_coupling_integral_matches_quadrature(grid8, box, rng):
    q = two_well_profile(box)
    u = random_band_field(grid8, DIRICHLET_SINE, rng)
    phi = random_band_field(grid8, NEUMANN_COSINE, rng)
    nodes, w3 = gl_rule_3d(box.lengths, 32)
    uv = eval_sine_field(u.coeffs, box.lengths, nodes)
    pv = eval_cosine_field(phi.coeffs, box.lengths, nodes)
    ref = quad3(eval_profile(q, nodes) * uv**2 * pv, w3)
    assert coupling_integral(u, q, phi) == pytest.approx(ref, abs=1e-12 * (1 + abs(ref)))


def test_dirichlet_reduction_solves_weak_form(grid8, box, rng):
    q = two_well_profile(box)
    u = random_band_field(grid8, DIRICHLET_SINE, rng)
    phi = reduce_dirichlet(u, q)
    # strong form inside the band: operator applied to phi returns the
    # sine projection of the density
    lhs = apply_operator(phi).coeffs
    total_band = 2 * (grid8.n - 1) + max(q.band)
    from sbpbox import basis
    dens = charge_density_coeffs(u, q, total_band)
    proj = basis.sine_from_cosine_matrix(grid8.n - 1, total_band)
    rhs = basis.apply_axis_matrices(dens, [proj, proj, proj])
    assert np.abs(lhs - rhs).max() <= 1e-11 * (1 + np.abs(rhs).max())


def test_neumann_reduction_zero_mean(grid8, box, rng):
    q = two_well_profile(box)
    u = random_band_field(grid8, DIRICHLET_SINE, rng)
    phi = reduce_neumann(u, q)
    assert phi.boundary_class == NEUMANN_COSINE
    assert phi.mean == 0.0
    lhs = apply_operator(phi).coeffs
    dens = charge_density_coeffs(u, q, grid8.n - 1).copy()
    dens[0, 0, 0] = 0.0
    assert np.abs(lhs - dens).max() <= 1e-11 * (1 + np.abs(dens).max())


@pytest.mark.parametrize("case", [NAVIER, NEUMANN])
def test_reduction_identity(box, rng, case):
    # int q u^2 Phi(u) = ||Phi(u)||_bih^2, the defining weak-form
    # identity tested with exact integrals
    q = two_well_profile(box)
    for n in (16, 32):
        grid = make_grid(box, n)
        for _ in range(5):
            u = random_band_field(grid, DIRICHLET_SINE, rng)
            assert reduction_identity_residual(u, q, case) <= 1e-8


def test_reduction_even_in_u(grid8, box, rng):
    q = two_well_profile(box)
    u = random_band_field(grid8, DIRICHLET_SINE, rng)
    a = reduce_dirichlet(u, q)
    b = reduce_dirichlet(u * -1.0, q)
    assert np.abs(a.coeffs - b.coeffs).max() == 0.0


def test_reduction_quadratic_scaling(grid8, box, rng):
    q = two_well_profile(box)
    u = random_band_field(grid8, DIRICHLET_SINE, rng)
    a = reduce_dirichlet(u, q)
    b = reduce_dirichlet(u * 3.0, q)
    assert np.abs(b.coeffs - 9.0 * a.coeffs).max() <= 1e-11 * (1 + np.abs(a.coeffs).max())


@pytest.mark.parametrize("case", [NAVIER, NEUMANN])
def test_e_functional_minimized_by_reduction(grid8, box, rng, case):
    q = separable_cosine_profile(box, amplitude=1.0, offset=0.4)
    u = random_band_field(grid8, DIRICHLET_SINE, rng)
    phi = reduce(u, q, case)
    e_star = e_functional(phi, u, q)
    assert e_star == pytest.approx(-0.5 * norm_bih(phi) ** 2, abs=1e-10)
    cls = DIRICHLET_SINE if case == NAVIER else NEUMANN_COSINE
    for _ in range(6):
        pert = random_band_field(grid8, cls, rng)
        if case == NEUMANN:
            c = pert.coeffs.copy()
            c[0, 0, 0] = 0.0
            pert = field_from_coeffs(grid8, NEUMANN_COSINE, c)
        trial = phi + pert * 0.1
        assert e_functional(trial, u, q) > e_star


def test_phi_bound_ratio_scale_invariant(grid8, box, rng):
    q = two_well_profile(box)
    u = random_band_field(grid8, DIRICHLET_SINE, rng)
    r1 = phi_bound_ratio(u, q)
    r2 = phi_bound_ratio(u * 7.5, q)
    assert r1 == pytest.approx(r2, rel=1e-12)
    with pytest.raises(DegenerateInput):
        phi_bound_ratio(zero_field(grid8), q)


def test_reduce_argument_checks(grid8, box, rng):
    q = two_well_profile(box)
    with pytest.raises(InvalidParameter):
        reduce(random_band_field(grid8, DIRICHLET_SINE, rng), q, "robin")
    with pytest.raises(UnsupportedClass):
        reduce_dirichlet(random_band_field(grid8, NEUMANN_COSINE, rng), q)
    u8 = random_band_field(grid8, DIRICHLET_SINE, rng)
    other = make_grid(BoxDomain((1.0, 1.3, 0.7)), 16)
    phi16 = zero_field(other, NEUMANN_COSINE)
    with pytest.raises(InvalidParameter):
        e_functional(phi16, u8, q)


@settings(max_examples=15)
@given(seed=st.integers(0, 2**16), amp=st.floats(0.2, 2.0))
def test_identity_property(seed, amp):
    box = BoxDomain((1.0, 1.3, 0.7))
    grid = make_grid(box, 12)
    q = separable_cosine_profile(box, amplitude=amp, offset=0.1)
    rng = np.random.default_rng(seed)
    u = random_band_field(grid, DIRICHLET_SINE, rng)
    assert reduction_identity_residual(u, q, NAVIER) <= 1e-8
    assert reduction_identity_residual(u, q, NEUMANN) <= 1e-8
