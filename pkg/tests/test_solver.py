"""Constrained descent, excited classes, probes, and verification."""

from dataclasses import replace

import numpy as np
import pytest

from sbpbox.charge import separable_cosine_profile, two_well_profile
from sbpbox.energy import ProblemSpec
from sbpbox.exceptions import (InvalidExponent, InvalidParameter,
                               LocalizationFailure, SymmetryViolation)
from sbpbox.grid import BoxDomain, make_grid, norm_l2
from sbpbox.operators import BoundaryFlux, solve_chi
from sbpbox.reduction import NAVIER, NEUMANN
from sbpbox.solver import (CONVERGED, MAX_ITER, STEP_FIXED, SolverOptions,
                           excited_states, gn_probe, minimize_navier,
                           minimize_neumann, verify_solution)

OPTS = SolverOptions(tol_grad=1e-8, max_iter=3000, seed=0)


def test_linear_mode_recovers_first_eigenvalue(box):
    # no coupling, no nonlinearity: the minimizer is the first box mode
    # and omega is its eigenvalue
    grid = make_grid(box, 8)
    spec = ProblemSpec(case=NAVIER, q=None, nonlinearity_enabled=False, grid=grid)
    sol = minimize_navier(spec, OPTS)
    lam1 = np.pi**2 * sum(1.0 / L**2 for L in box.lengths)
    assert sol.converged
    assert sol.status == CONVERGED
    assert sol.omega == pytest.approx(lam1, rel=1e-6)
    assert sol.multipliers.omega_tilde == pytest.approx(sol.omega, rel=1e-8)


def test_navier_coupled_solve_and_verification(box):
    grid = make_grid(box, 8)
    q = two_well_profile(box, c0=0.4)
    spec = ProblemSpec(case=NAVIER, q=q, p=2.5, grid=grid)
    sol = minimize_navier(spec, OPTS)
    assert sol.converged
    assert sol.grad_norm <= 1e-8
    assert abs(norm_l2(sol.u) - 1.0) <= 1e-10
    report = verify_solution(sol, spec)
    assert report.passed, report.summary()
    assert report.diagnostics["phi_bound_ratio"] > 0.0


def test_trace_is_monotone_and_on_sphere(box):
    grid = make_grid(box, 8)
    q = two_well_profile(box, c0=0.4)
    spec = ProblemSpec(case=NAVIER, q=q, p=2.8, grid=grid)
    sol = minimize_navier(spec, OPTS)
    values = [row.J for row in sol.trace]
    for older, newer in zip(values[:-1], values[1:]):
        assert newer <= older + 1e-12 * (1.0 + abs(older))
    for row in sol.trace:
        assert abs(row.c1_residual) <= 1e-10
    assert sol.trace[0].iteration == 0
    assert sol.trace[-1].grad_norm == pytest.approx(sol.grad_norm, rel=1e-12)


def test_determinism_bit_identical(box):
    grid = make_grid(box, 8)
    q = two_well_profile(box)
    spec = ProblemSpec(case=NAVIER, q=q, p=2.5, grid=grid)
    a = minimize_navier(spec, OPTS)
    b = minimize_navier(spec, OPTS)
    assert np.array_equal(a.u.coeffs, b.u.coeffs)
    assert a.J == b.J
    assert len(a.trace) == len(b.trace)


def test_multistart_agreement(box):
    grid = make_grid(box, 8)
    q = two_well_profile(box)
    spec = ProblemSpec(case=NAVIER, q=q, p=2.5, grid=grid)
    sol = minimize_navier(spec, replace(OPTS, multistart=3))
    assert len(sol.restart_values) == 3
    spread = max(sol.restart_values) - min(sol.restart_values)
    assert spread <= 1e-6 * (1.0 + abs(sol.J))
    assert sol.J == pytest.approx(min(sol.restart_values), abs=1e-15)


def test_excited_states_on_cube(cube):
    # unit cube, linear mode: ground 3 pi^2, odd class in axis 0 jumps
    # to the (2,1,1) eigenvalue 6 pi^2
    grid = make_grid(cube, 8)
    spec = ProblemSpec(case=NAVIER, q=None, nonlinearity_enabled=False, grid=grid)
    sols = excited_states(spec, OPTS, classes=[0])
    assert len(sols) == 2
    ground, excited = sols
    assert ground.omega == pytest.approx(3.0 * np.pi**2, rel=1e-6)
    assert excited.omega == pytest.approx(6.0 * np.pi**2, rel=1e-6)
    assert ground.J <= excited.J + 1e-12
    # the restricted minimizer lives in the odd subspace: odd
    # wavenumbers in the reflected axis carry no amplitude
    c = excited.u.coeffs
    assert np.abs(c[0::2, :, :]).max() <= 1e-12


def test_excited_rejects_asymmetric_profile(box):
    grid = make_grid(box, 8)
    c = np.zeros((2, 1, 1))
    c[1, 0, 0] = 1.0
    from sbpbox.charge import ChargeProfile
    q = ChargeProfile(box, c)
    spec = ProblemSpec(case=NAVIER, q=q, p=2.5, grid=grid)
    with pytest.raises(SymmetryViolation):
        excited_states(spec, OPTS, classes=[0])


def test_neumann_solve_keeps_both_constraints(box):
    grid = make_grid(box, 8)
    q = two_well_profile(box, c0=0.2)
    alpha = 0.1
    spec = ProblemSpec(case=NEUMANN, q=q, alpha=alpha, grid=grid)
    sol = minimize_neumann(spec, OPTS)
    assert sol.converged
    assert sol.mu is not None
    assert sol.residual_sphere <= 1e-10
    assert sol.residual_charge <= 1e-8
    for row in sol.trace:
        assert abs(row.c1_residual) <= 1e-10
        assert abs(row.c2_residual) <= 1e-8
    report = verify_solution(sol, spec)
    assert report.passed, report.summary()
    assert "omega_minus_mu_alpha" in report.diagnostics


def test_neumann_with_flux_data(box):
    grid = make_grid(box, 8)
    q = two_well_profile(box, c0=0.3)
    flux = BoundaryFlux(box, h1={"x1_lo": 0.3}, h2={"x2_hi": 0.2})
    chi = solve_chi(flux, grid)
    spec = ProblemSpec(case=NEUMANN, q=q, chi=chi, alpha=chi.alpha, grid=grid)
    sol = minimize_neumann(spec, OPTS)
    assert sol.converged
    report = verify_solution(sol, spec)
    assert report.passed, report.summary()
    # the packaged potential adds chi and the chemical-potential shift
    # to the reduced part
    gap = sol.phi.coeffs - sol.phi_reduced.coeffs - chi.coeffs
    assert abs(gap[0, 0, 0] - sol.mu) <= 1e-10 * (1.0 + abs(sol.mu))
    gap[0, 0, 0] = 0.0
    assert np.abs(gap).max() <= 1e-12


def test_neumann_infeasible_level(box):
    grid = make_grid(box, 8)
    q = two_well_profile(box)
    spec = ProblemSpec(case=NEUMANN, q=q, alpha=9.0, grid=grid)
    with pytest.raises(LocalizationFailure):
        minimize_neumann(spec, OPTS)


def test_max_iter_flag_not_exception(box):
    grid = make_grid(box, 8)
    q = two_well_profile(box)
    spec = ProblemSpec(case=NAVIER, q=q, p=2.5, grid=grid)
    sol = minimize_navier(spec, replace(OPTS, max_iter=2))
    assert not sol.converged
    assert sol.status == MAX_ITER


def test_fixed_step_rule_descends(box):
    grid = make_grid(box, 8)
    spec = ProblemSpec(case=NAVIER, q=None, nonlinearity_enabled=False, grid=grid)
    sol = minimize_navier(spec, replace(OPTS, step_rule=STEP_FIXED, max_iter=4000,
                                        tol_grad=1e-6))
    assert sol.trace[-1].J <= sol.trace[0].J
    lam1 = np.pi**2 * sum(1.0 / L**2 for L in box.lengths)
    assert sol.omega == pytest.approx(lam1, rel=1e-4)


def test_solver_options_validation():
    with pytest.raises(InvalidParameter):
        SolverOptions(tol_grad=0.0)
    with pytest.raises(InvalidParameter):
        SolverOptions(backtrack=1.0)
    with pytest.raises(InvalidParameter):
        SolverOptions(armijo=1.5)
    with pytest.raises(InvalidParameter):
        SolverOptions(step_rule="exact-line-search")
    with pytest.raises(InvalidParameter):
        SolverOptions(multistart=0)
    with pytest.raises(InvalidParameter):
        SolverOptions(symmetry_axis=3)
    # a spec without a grid cannot be solved
    with pytest.raises(InvalidParameter):
        minimize_navier(ProblemSpec(case=NAVIER, grid=None), OPTS)


def test_gn_probe_report(box):
    grid = make_grid(box, 8)
    rep = gn_probe(grid, p=2.5, r=0.8, samples=40, seed=1)
    assert rep.samples == 40
    assert rep.max_ratio >= rep.mean_ratio > 0.0
    assert rep.scale_defect <= 1e-12
    same = gn_probe(grid, p=2.5, r=0.8, samples=40, seed=1)
    assert same.max_ratio == rep.max_ratio


def test_gn_probe_window(box):
    grid = make_grid(box, 8)
    # p - 2 < r < 3 (1 - p/6); both edges excluded
    with pytest.raises(InvalidExponent):
        gn_probe(grid, p=2.5, r=0.5)
    with pytest.raises(InvalidExponent):
        gn_probe(grid, p=2.5, r=1.75)
    with pytest.raises(InvalidParameter):
        gn_probe(grid, p=3.4, r=0.8)


def test_verification_flags_tampering(box):
    grid = make_grid(box, 8)
    q = two_well_profile(box, c0=0.4)
    spec = ProblemSpec(case=NAVIER, q=q, p=2.5, grid=grid)
    sol = minimize_navier(spec, OPTS)
    # scale the wave function: sphere, stationarity and identity checks
    # must all light up
    bad = replace(sol, u=sol.u * 1.001)
    report = verify_solution(bad, spec)
    assert not report.passed
    names = {c.name: c.passed for c in report.checks}
    assert not names["sphere-constraint"]
    summary = report.summary()
    assert "FAIL" in summary and "pass" in summary


def test_verification_flags_wrong_multiplier(box):
    grid = make_grid(box, 8)
    q = two_well_profile(box, c0=0.4)
    spec = ProblemSpec(case=NAVIER, q=q, p=2.5, grid=grid)
    sol = minimize_navier(spec, OPTS)
    from sbpbox.energy import Multipliers
    bad = replace(sol, multipliers=Multipliers(omega=sol.omega + 0.1))
    report = verify_solution(bad, spec)
    names = {c.name: c.passed for c in report.checks}
    assert not names["stationarity"]
