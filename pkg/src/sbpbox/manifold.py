"""Constraint sets, tangent projections, retractions, feasible points.

Two constraint sets appear: the unit L^2 sphere B, and its intersection
M with the charge level set int q u^2 = alpha.  The solver works with
Riemannian projected gradients, so this module supplies the tangent
projections and retractions for both, a feasibility analysis for the
level alpha, and the constructive disjoint-support families that
witness M being nonempty (and having genus at least k).

Feasible points are built as nodal fields: two polynomial bumps with
disjoint balls, one where q < alpha and one where q > alpha, mixed so
that both constraints hold exactly in the nodal quadrature.  Keeping
them nodal (not band-projected) preserves the exact disjointness that
the genus certificate relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .charge import ChargeProfile
from .energy import charge_gradient_field, charge_moment
from .exceptions import (
    CertificateFailure,
    DegenerateConstraints,
    DegenerateInput,
    InvalidParameter,
    LocalizationFailure,
    OffManifold,
    PackingFailure,
    RetractionFailure,
)
from .grid import (
    CENTERED,
    DIRICHLET_SINE,
    NODAL,
    Grid,
    ScalarField,
    inner_l2,
    norm_l2,
)

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
BOUNDARY_CASE = "boundary-case"

SPHERE_ONLY = "sphere-only"
SPHERE_AND_CHARGE = "sphere-and-charge"

__all__ = [
    "FEASIBLE",
    "INFEASIBLE",
    "BOUNDARY_CASE",
    "SPHERE_ONLY",
    "SPHERE_AND_CHARGE",
    "ConstraintSpec",
    "FeasibilityReport",
    "project_sphere",
    "tangent_project_B",
    "tangent_project_M",
    "retract_M",
    "validate_alpha",
    "feasible_point",
    "genus_certificate",
    "nodal_charge_moment",
    "constraint_residuals",
]


@dataclass(frozen=True)
class ConstraintSpec:
    """Which constraints are active, their level, and drift tolerances."""

    kind: str = SPHERE_ONLY
    alpha: float = 0.0
    tol_sphere: float = 1e-10
    tol_charge: float = 1e-8

    def __post_init__(self):
        if self.kind not in (SPHERE_ONLY, SPHERE_AND_CHARGE):
            raise InvalidParameter(f"unknown constraint kind {self.kind!r}")
        if self.tol_sphere <= 0 or self.tol_charge <= 0:
            raise InvalidParameter("constraint tolerances must be positive")


@dataclass(frozen=True)
class FeasibilityReport:
    """Outcome of the level-feasibility analysis for alpha."""

    verdict: str
    alpha: float
    q_min: float
    q_max: float
    level_fraction: float
    delta: float

    @property
    def feasible(self) -> bool:
        return self.verdict == FEASIBLE


def project_sphere(u: ScalarField) -> ScalarField:
    """u / |u|_2; the canonical retraction onto the unit sphere."""
    nu = norm_l2(u)
    if nu == 0.0:
        raise DegenerateInput("cannot project the zero field onto the sphere")
    return u * (1.0 / nu)


def _require_sphere(u: ScalarField, tol: float = 1e-8):
    nu = norm_l2(u)
    if abs(nu - 1.0) > tol:
        raise OffManifold(f"|u|_2 = {nu} is off the unit sphere")


def tangent_project_B(u: ScalarField, g: ScalarField) -> ScalarField:
    """Remove the radial component: g - <g, u> u."""
    _require_sphere(u)
    return g - inner_l2(g, u) * u


def _charge_pair(u: ScalarField, q: ChargeProfile):
    qu = charge_gradient_field(u, q)
    gram = np.array([
        [inner_l2(u, u), inner_l2(u, qu)],
        [inner_l2(qu, u), inner_l2(qu, qu)],
    ])
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > 1e12:
        raise DegenerateConstraints(
            f"constraint gradients u and q u nearly parallel (condition {cond:.3e})")
    return qu, gram


def tangent_project_M(u: ScalarField, g: ScalarField, q: ChargeProfile) -> ScalarField:
    """Remove the span{u, q u} component of g via a 2x2 Gram solve."""
    _require_sphere(u)
    qu, gram = _charge_pair(u, q)
    rhs = np.array([inner_l2(g, u), inner_l2(g, qu)])
    a, b = np.linalg.solve(gram, rhs)
    return g - a * u - b * qu


def constraint_residuals(u: ScalarField, q: ChargeProfile | None, alpha: float):
    """(|u|_2^2 - 1, int q u^2 - alpha); second entry 0 without a profile."""
    c1 = norm_l2(u) ** 2 - 1.0
    if q is None:
        return c1, 0.0
    if u.boundary_class == NODAL:
        c2 = nodal_charge_moment(u, q) - alpha
    else:
        c2 = charge_moment(u, q) - alpha
    return c1, c2


def retract_M(u: ScalarField, alpha: float, q: ChargeProfile,
              max_steps: int = 20, tol: float = 1e-12) -> ScalarField:
    """Newton restoration of both constraints with span{u, q u} corrections.

    Intended for small drifts after a gradient step; both residuals are
    below 1e-10 on success (usually far below).
    """
    v = u
    for _ in range(max_steps):
        c1, c2 = constraint_residuals(v, q, alpha)
        if abs(c1) <= tol and abs(c2) <= tol:
            return v
        qv = charge_gradient_field(v, q)
        jac = 2.0 * np.array([
            [inner_l2(v, v), inner_l2(v, qv)],
            [inner_l2(qv, v), inner_l2(qv, qv)],
        ])
        cond = np.linalg.cond(jac)
        if not np.isfinite(cond) or cond > 1e12:
            raise DegenerateConstraints(
                f"retraction Jacobian degenerate (condition {cond:.3e})")
        da, db = np.linalg.solve(jac, [-c1, -c2])
        v = v + da * v + db * qv
    c1, c2 = constraint_residuals(v, q, alpha)
    if abs(c1) <= 1e-10 and abs(c2) <= 1e-10:
        return v
    raise RetractionFailure(
        f"constraint restoration stalled at residuals ({c1:.3e}, {c2:.3e})")


def validate_alpha(q: ChargeProfile, alpha: float, grid: Grid | None = None,
                   delta: float | None = None,
                   fraction_threshold: float = 1e-3) -> FeasibilityReport:
    """Feasibility of the charge level: needs q_min < alpha < q_max.

    At an extremum the verdict is the boundary case: existence then
    hinges on the level set q = alpha having zero volume, which nodal
    data cannot decide; the report carries the fraction of nodes within
    delta of the level as an honest proxy.
    """
    q_min, q_max = q.extrema()
    if delta is None:
        delta = 1e-3 * (q_max - q_min + 1.0)
    if grid is not None:
        fraction = q.near_level_fraction(grid, alpha, delta)
    else:
        nodes = [np.linspace(0.0, L, 64) for L in q.domain.lengths]
        fraction = float(np.mean(np.abs(q.eval_on(nodes) - alpha) < delta))
    edge = 1e-12 * (abs(q_max) + abs(q_min) + 1.0)
    if alpha < q_min - edge or alpha > q_max + edge:
        verdict = INFEASIBLE
    elif alpha <= q_min + edge or alpha >= q_max - edge:
        verdict = BOUNDARY_CASE
    else:
        verdict = FEASIBLE
    return FeasibilityReport(verdict=verdict, alpha=alpha, q_min=q_min, q_max=q_max,
                             level_fraction=fraction, delta=delta)


def nodal_charge_moment(u: ScalarField, q: ChargeProfile) -> float:
    """int q u^2 by nodal quadrature on the field's own node set."""
    nodes = [u.grid.nodes(u.node_set, ax) for ax in range(3)]
    qv = q.eval_on(nodes)
    return float(np.sum(qv * u.values**2) * u.grid.cell_volume)


def _bump_values(grid: Grid, center, radius: float) -> np.ndarray:
    """(1 - (r/R)^2)^3 inside the ball, zero outside, at centered nodes."""
    nodes = [grid.centered_nodes(ax) for ax in range(3)]
    r2 = sum(((nodes[ax] - center[ax]) ** 2)[tuple(
        slice(None) if a == ax else None for a in range(3))] for ax in range(3))
    s = 1.0 - r2 / radius**2
    return np.where(s > 0.0, s, 0.0) ** 3


def _greedy_centers(q: ChargeProfile, alpha: float, grid: Grid, radius: float,
                    count_each: int, separation: float):
    """Pick disjoint ball centers: the k best below the level, k best above."""
    nodes = [grid.centered_nodes(ax) for ax in range(3)]
    qv = q.eval_on(nodes)
    coords = np.stack(np.meshgrid(*nodes, indexing="ij"), axis=-1).reshape(-1, 3)
    score = (qv - alpha).reshape(-1)
    inside = np.ones(len(coords), dtype=bool)
    for ax, L in enumerate(grid.lengths):
        inside &= (coords[:, ax] >= radius) & (coords[:, ax] <= L - radius)
    chosen: list[np.ndarray] = []

    def pick(side: int) -> list[np.ndarray]:
        order = np.argsort(-side * score)
        out = []
        for idx in order:
            if not inside[idx] or side * score[idx] <= 0.0:
                continue
            c = coords[idx]
            if all(np.linalg.norm(c - other) >= separation for other in chosen):
                chosen.append(c)
                out.append(c)
                if len(out) == count_each:
                    return out
        raise PackingFailure(
            f"could not place {count_each} disjoint balls of radius {radius} "
            f"on the side where q {'>' if side > 0 else '<'} {alpha}")

    below = pick(-1)
    above = pick(+1)
    return below, above


def feasible_point(q: ChargeProfile, alpha: float, k: int, grid: Grid,
                   radius: float | None = None) -> list[ScalarField]:
    """k disjoint-support members of M, built from paired localized bumps.

    Each member mixes a unit bump where q < alpha with a unit bump where
    q > alpha; the mixing weights solve the two constraints exactly in
    the nodal quadrature because the supports do not share a node.
    """
    if k < 1:
        raise InvalidParameter("need k >= 1")
    report = validate_alpha(q, alpha, grid)
    if report.verdict != FEASIBLE:
        raise LocalizationFailure(
            f"alpha={alpha} is {report.verdict} for this profile "
            f"(range [{report.q_min}, {report.q_max}])")
    if radius is None:
        radius = 0.11 * min(grid.lengths)
    # slack past 2R keeps the nodal supports disjoint with a cell to spare
    separation = 2.0 * radius + 0.5 * min(grid.lengths) / grid.n
    below, above = _greedy_centers(q, alpha, grid, radius, k, separation)

    fields = []
    cell = grid.cell_volume
    for c_lo, c_hi in zip(below, above):
        b_lo = _bump_values(grid, c_lo, radius)
        b_hi = _bump_values(grid, c_hi, radius)
        for b, c in ((b_lo, c_lo), (b_hi, c_hi)):
            nrm = np.sqrt(np.sum(b**2) * cell)
            if nrm == 0.0:
                raise PackingFailure(f"bump at {c} hit no grid node; refine the grid")
            b /= nrm
        f_lo = ScalarField(grid, NODAL, values=b_lo, node_set=CENTERED)
        f_hi = ScalarField(grid, NODAL, values=b_hi, node_set=CENTERED)
        beta_lo = nodal_charge_moment(f_lo, q)
        beta_hi = nodal_charge_moment(f_hi, q)
        if not beta_lo < alpha < beta_hi:
            raise LocalizationFailure(
                f"bump charge moments ({beta_lo:.4f}, {beta_hi:.4f}) do not bracket "
                f"alpha={alpha}; the bumps are not localized enough")
        t2 = (alpha - beta_lo) / (beta_hi - beta_lo)
        s2 = 1.0 - t2
        u = ScalarField(grid, NODAL,
                        values=np.sqrt(s2) * b_lo + np.sqrt(t2) * b_hi,
                        node_set=CENTERED)
        fields.append(u)
    return fields


def genus_certificate(fields, q: ChargeProfile | None = None,
                      alpha: float = 0.0, tol_sphere: float = 1e-8,
                      tol_charge: float = 1e-8) -> int:
    """Certify k disjoint-support members of the constraint set.

    Checks pairwise nodal disjointness and constraint membership; the
    count k is then a lower bound for the genus of the set spanned (the
    unit sphere of a k-dimensional subspace sits inside it).  Nothing
    beyond explicitly constructed families is certified.
    """
    fields = list(fields)
    if not fields:
        raise CertificateFailure("empty family certifies nothing")
    for i, f in enumerate(fields):
        nu = norm_l2(f)
        if abs(nu - 1.0) > tol_sphere:
            raise CertificateFailure(f"member {i}: |u|_2 = {nu} off the sphere")
        if q is not None:
            _, c2 = constraint_residuals(f, q, alpha)
            if abs(c2) > tol_charge:
                raise CertificateFailure(f"member {i}: charge residual {c2:.3e}")
    for i in range(len(fields)):
        for j in range(i + 1, len(fields)):
            overlap = np.abs(fields[i].values * fields[j].values).max()
            if overlap != 0.0:
                raise CertificateFailure(
                    f"members {i} and {j} share support (max |u_i u_j| = {overlap:.3e})")
    return len(fields)
