"""Constraint manifolds: projections, retraction, feasibility, certificates."""

import numpy as np
import pytest

from sbpbox.charge import constant_profile, two_well_profile
from sbpbox.energy import charge_gradient_field, charge_moment
from sbpbox.exceptions import (CertificateFailure, DegenerateConstraints,
                               DegenerateInput, LocalizationFailure,
                               OffManifold, PackingFailure, RetractionFailure)
from sbpbox.grid import (DIRICHLET_SINE, NODAL, inner_l2, make_grid, norm_l2,
                         random_band_field, zero_field)
from sbpbox.manifold import (BOUNDARY_CASE, FEASIBLE, INFEASIBLE,
                             constraint_residuals, feasible_point,
                             genus_certificate, nodal_charge_moment,
                             project_sphere, retract_M, tangent_project_B,
                             tangent_project_M, validate_alpha)


def test_project_sphere(grid8, rng):
    u = random_band_field(grid8, DIRICHLET_SINE, rng)
    p = project_sphere(u)
    assert norm_l2(p) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(DegenerateInput):
        project_sphere(zero_field(grid8))


def test_tangent_project_sphere(grid8, rng):
    u = project_sphere(random_band_field(grid8, DIRICHLET_SINE, rng))
    g = random_band_field(grid8, DIRICHLET_SINE, rng)
    t = tangent_project_B(u, g)
    assert abs(inner_l2(t, u)) <= 1e-13 * norm_l2(g)
    t2 = tangent_project_B(u, t)
    assert norm_l2(t2 - t) <= 1e-13 * norm_l2(g)
    with pytest.raises(OffManifold):
        tangent_project_B(u * 2.0, g)


def test_tangent_project_charge(grid8, box, rng):
    q = two_well_profile(box)
    u = project_sphere(random_band_field(grid8, DIRICHLET_SINE, rng))
    g = random_band_field(grid8, DIRICHLET_SINE, rng)
    t = tangent_project_M(u, g, q)
    qu = charge_gradient_field(u, q)
    scale = norm_l2(g)
    assert abs(inner_l2(t, u)) <= 1e-12 * scale
    assert abs(inner_l2(t, qu)) <= 1e-12 * scale
    t2 = tangent_project_M(u, t, q)
    assert norm_l2(t2 - t) <= 1e-12 * scale


def test_tangent_project_degenerate(grid8, box, rng):
    q = constant_profile(box, 1.0)
    u = project_sphere(random_band_field(grid8, DIRICHLET_SINE, rng))
    g = random_band_field(grid8, DIRICHLET_SINE, rng)
    with pytest.raises(DegenerateConstraints):
        tangent_project_M(u, g, q)


def test_constraint_residuals(grid8, box, rng):
    q = two_well_profile(box)
    u = project_sphere(random_band_field(grid8, DIRICHLET_SINE, rng))
    c1, c2 = constraint_residuals(u, q, 0.1)
    assert c1 == pytest.approx(norm_l2(u) ** 2 - 1.0, abs=1e-14)
    assert c2 == pytest.approx(charge_moment(u, q) - 0.1, abs=1e-12)
    c1_only, c2_zero = constraint_residuals(u, None, 0.0)
    assert c2_zero == 0.0
    assert c1_only == c1


def test_retract_from_perturbation(grid8, box, rng):
    q = two_well_profile(box)
    alpha = 0.1
    u0 = retract_M(project_sphere(random_band_field(grid8, DIRICHLET_SINE, rng)),
                   alpha, q)
    c1, c2 = constraint_residuals(u0, q, alpha)
    assert abs(c1) <= 1e-10
    assert abs(c2) <= 1e-10
    # perturb and retract back
    pert = u0 + random_band_field(grid8, DIRICHLET_SINE, rng) * 0.05
    u1 = retract_M(pert, alpha, q)
    c1, c2 = constraint_residuals(u1, q, alpha)
    assert abs(c1) <= 1e-10
    assert abs(c2) <= 1e-10
    # the retraction moves the point by an amount comparable to the
    # constraint violation, not more
    assert norm_l2(u1 - pert) <= 1.0


def test_retract_failure_unreachable_level(grid8, box, rng):
    q = two_well_profile(box)
    u = project_sphere(random_band_field(grid8, DIRICHLET_SINE, rng))
    # the sphere caps the reachable charge moment at max q
    with pytest.raises(RetractionFailure):
        retract_M(u, 9.0, q)


def test_validate_alpha_verdicts(box):
    grid = make_grid(box, 8)
    q = two_well_profile(box)
    lo, hi = q.extrema()
    rep = validate_alpha(q, 0.2, grid)
    assert rep.verdict == FEASIBLE
    assert rep.feasible
    assert rep.q_min == pytest.approx(lo, rel=1e-12)
    assert rep.q_max == pytest.approx(hi, rel=1e-12)
    # a generic level has (near) empty near-level set
    assert 0.0 <= rep.level_fraction < 0.1
    bad = validate_alpha(q, hi + 0.5, grid)
    assert bad.verdict == INFEASIBLE
    assert not bad.feasible
    edge = validate_alpha(q, hi, grid)
    assert edge.verdict == BOUNDARY_CASE


def test_validate_alpha_constant_profile(box):
    q = constant_profile(box, 1.0)
    rep = validate_alpha(q, 1.0, make_grid(box, 8))
    assert rep.verdict == BOUNDARY_CASE
    assert rep.level_fraction == pytest.approx(1.0)
    off = validate_alpha(q, 0.5, make_grid(box, 8))
    assert off.verdict == INFEASIBLE


def test_nodal_charge_moment_agrees_spectrally(grid16, box, rng):
    q = two_well_profile(box)
    u = random_band_field(grid16, DIRICHLET_SINE, rng)
    spectral = charge_moment(u, q)
    assert nodal_charge_moment(u, q) == pytest.approx(spectral, abs=1e-13 * (1 + abs(spectral)))


@pytest.mark.parametrize("alpha", [0.0, 0.2])
def test_feasible_point_exact_constraints(box, alpha):
    grid = make_grid(box, 16)
    q = two_well_profile(box)
    fields = feasible_point(q, alpha, 3, grid)
    assert len(fields) == 3
    for f in fields:
        assert f.boundary_class == NODAL
        assert abs(norm_l2(f) - 1.0) <= 1e-12
        assert abs(nodal_charge_moment(f, q) - alpha) <= 1e-10
    # distinct members have disjoint supports
    for i in range(3):
        for j in range(i + 1, 3):
            assert np.abs(fields[i].values * fields[j].values).max() == 0.0


def test_feasible_point_infeasible_alpha(box):
    grid = make_grid(box, 16)
    q = two_well_profile(box)
    with pytest.raises(LocalizationFailure):
        feasible_point(q, 9.0, 1, grid)


def test_feasible_point_packing_limit(box):
    grid = make_grid(box, 8)
    q = two_well_profile(box)
    with pytest.raises(PackingFailure):
        feasible_point(q, 0.0, 40, grid)


def test_genus_certificate_accepts(box):
    grid = make_grid(box, 16)
    q = two_well_profile(box)
    fields = feasible_point(q, 0.2, 3, grid)
    assert genus_certificate(fields, q=q, alpha=0.2) == 3
    with pytest.raises(CertificateFailure):
        genus_certificate([], q=q, alpha=0.2)


def test_genus_certificate_rejects_overlap(box):
    grid = make_grid(box, 16)
    q = two_well_profile(box)
    fields = feasible_point(q, 0.0, 2, grid)
    with pytest.raises(CertificateFailure):
        genus_certificate([fields[0], fields[0]], q=q, alpha=0.0)


def test_genus_certificate_rejects_off_sphere(box):
    grid = make_grid(box, 16)
    q = two_well_profile(box)
    fields = feasible_point(q, 0.0, 2, grid)
    bad = fields[0] * 1.01
    with pytest.raises(CertificateFailure):
        genus_certificate([bad, fields[1]], q=q, alpha=0.0)
