"""Riemannian projected-gradient minimization of the reduced energy.

Ground states are minima of J on the unit sphere (sphere-vanishing
case) or on its intersection with the charge level set (natural-flux
case).  The descent is classical: move along the negative tangent
gradient, retract, and accept only monotone decreases, with a
two-point adaptive steplength and Armijo backtracking.

Excited states come from symmetry restriction: when the charge profile
is even under a coordinate reflection of the box, the subspace of
waves odd under that reflection is invariant, and a minimizer within
it is a genuine critical point of the full energy.  No claim is made
that these realize any particular min-max level.

Every solve is deterministic given its seed: identical options produce
bit-identical iterate traces.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import basis
from .charge import ChargeProfile
from .energy import (
    P_MAX,
    P_MIN,
    Multipliers,
    ProblemSpec,
    charge_gradient_field,
    charge_moment,
    evaluate,
    multiplier_navier,
    multipliers_neumann,
)
from .exceptions import (
    CertificateFailure,
    DegenerateConstraints,
    DegenerateInput,
    InvalidExponent,
    InvalidParameter,
    LocalizationFailure,
    RetractionFailure,
    SymmetryViolation,
)
from .grid import (
    DIRICHLET_SINE,
    Grid,
    ScalarField,
    inner_l2,
    norm_h10,
    norm_l2,
    norm_lp,
    random_band_field,
)
from .manifold import (
    FEASIBLE,
    feasible_point,
    project_sphere,
    retract_M,
    tangent_project_B,
    tangent_project_M,
    validate_alpha,
)
from .operators import apply_operator
from .reduction import (
    NAVIER,
    NEUMANN,
    phi_bound_ratio,
    reduce as reduce_potential,
    reduction_identity_residual,
)

STEP_FIXED = "fixed"
STEP_ADAPTIVE = "adaptive-with-backtracking"

CONVERGED = "converged"
MAX_ITER = "max-iter"
STALLED = "stalled"

__all__ = [
    "STEP_FIXED",
    "STEP_ADAPTIVE",
    "SolverOptions",
    "TraceRow",
    "Solution",
    "GNReport",
    "Check",
    "VerificationReport",
    "minimize_navier",
    "minimize_neumann",
    "excited_states",
    "gn_probe",
    "verify_solution",
]


@dataclass(frozen=True)
class SolverOptions:
    """Descent controls; every run with the same options and seed is identical."""

    tol_grad: float = 1e-8
    max_iter: int = 2000
    step_rule: str = STEP_ADAPTIVE
    backtrack: float = 0.5
    armijo: float = 1e-4
    seed: int = 0
    multistart: int = 1
    symmetry_axis: int | None = None
    precondition: bool = True

    def __post_init__(self):
        if self.tol_grad <= 0:
            raise InvalidParameter("tol_grad must be positive")
        if not 0.0 < self.backtrack < 1.0:
            raise InvalidParameter("backtracking factor must lie in (0, 1)")
        if self.armijo <= 0 or self.armijo >= 1:
            raise InvalidParameter("Armijo constant must lie in (0, 1)")
        if self.step_rule not in (STEP_FIXED, STEP_ADAPTIVE):
            raise InvalidParameter(f"unknown step rule {self.step_rule!r}")
        if self.max_iter < 1 or self.multistart < 1:
            raise InvalidParameter("max_iter and multistart must be at least 1")
        if self.symmetry_axis is not None and self.symmetry_axis not in (0, 1, 2):
            raise InvalidParameter("symmetry axis must be 0, 1 or 2")


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    J: float
    grad_norm: float
    omega: float
    mu: float | None
    c1_residual: float
    c2_residual: float


@dataclass(frozen=True)
class Solution:
    """A (near-)critical point with its convergence record.

    ``phi`` is the physically scaled potential: for the natural-flux
    case the total phi_reduced + chi + mu, otherwise phi_reduced
    itself.  ``converged`` is a flag, never an exception: sweeps keep
    partial results.
    """

    case: str
    u: ScalarField
    phi: ScalarField
    phi_reduced: ScalarField
    multipliers: Multipliers
    J: float
    grad_norm: float
    residual_sphere: float
    residual_charge: float
    trace: tuple[TraceRow, ...]
    converged: bool
    status: str
    restart_values: tuple[float, ...] = ()

    @property
    def omega(self) -> float:
        return self.multipliers.omega

    @property
    def mu(self) -> float | None:
        return self.multipliers.mu


def _sine_symbol(grid: Grid) -> np.ndarray:
    axes = [(np.pi * np.arange(1, grid.n) / L) ** 2 for L in grid.lengths]
    return axes[0][:, None, None] + axes[1][None, :, None] + axes[2][None, None, :]


def _odd_mask(grid: Grid, axis: int) -> np.ndarray:
    """Sine modes odd under x -> L - x in one axis: even wavenumbers there."""
    k = np.arange(1, grid.n)
    keep = (k % 2 == 0)
    shape = [1, 1, 1]
    shape[axis] = grid.n - 1
    mask = np.ones(grid.sine_shape, dtype=bool)
    return mask & keep.reshape(shape)


def _masked(u: ScalarField, mask: np.ndarray | None) -> ScalarField:
    if mask is None:
        return u
    return ScalarField(u.grid, DIRICHLET_SINE, coeffs=np.where(mask, u.coeffs, 0.0))


def _abs_move(u: ScalarField) -> ScalarField:
    """Interior-node absolute value, reinterpolated and renormalized."""
    flipped = ScalarField(u.grid, DIRICHLET_SINE, values=np.abs(u.values))
    return project_sphere(flipped)


def _check_even_profile(q: ChargeProfile, grid: Grid, axis: int, tol: float = 1e-10):
    nodes = [grid.centered_nodes(ax) for ax in range(3)]
    qv = q.eval_on(nodes)
    gap = float(np.max(np.abs(qv - np.flip(qv, axis=axis))))
    if gap > tol * (1.0 + float(np.max(np.abs(qv)))):
        raise SymmetryViolation(
            f"charge profile is not even under reflection in axis {axis} "
            f"(nodal asymmetry {gap:.3e}); the odd subspace is not invariant")


def _sine_projection_of_nodal(f: ScalarField) -> ScalarField:
    """Midpoint-quadrature sine coefficients of a centered-node field."""
    grid = f.grid
    mats = [basis.midpoint_projection_matrix(L, grid.n, basis.SINE, grid.n - 1)
            for L in grid.lengths]
    coeffs = basis.apply_axis_matrices(f.values, mats)
    return ScalarField(grid, DIRICHLET_SINE, coeffs=coeffs)


def _row_multipliers(case, spec, u, grad):
    if case == NAVIER:
        return float(inner_l2(grad, u)), None
    qu = charge_gradient_field(u, spec.q)
    gram = np.array([[inner_l2(u, u), inner_l2(qu, u)],
                     [inner_l2(qu, u), inner_l2(qu, qu)]])
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > 1e12:
        raise DegenerateConstraints(
            f"constraint gradients nearly parallel (Gram condition {cond:.3e})")
    rhs = np.array([inner_l2(grad, u), inner_l2(grad, qu)])
    omega, neg_mu = np.linalg.solve(gram, rhs)
    return float(omega), float(-neg_mu)


def _descend(spec: ProblemSpec, opts: SolverOptions, u0: ScalarField,
             tangent, retract, mask: np.ndarray | None, allow_abs: bool):
    """Monotone projected-gradient loop shared by both constraint cases.

    The search direction is the tangent gradient pushed through an
    inverse-Helmholtz scaling (division by 1 + lambda_k, diagonal in the
    sine basis) and re-projected; this flattens the stiff high-mode part
    of the Hessian while keeping a genuine descent direction, since the
    scaling is positive definite.  Steplengths are two-point adaptive
    with Armijo backtracking on the directional derivative.
    """
    u = retract(_masked(u0, mask))
    grid = u.grid
    pre = 1.0 / (1.0 + _sine_symbol(grid)) if opts.precondition else None

    def direction(w: ScalarField, g_tan: ScalarField) -> ScalarField:
        if pre is None:
            return g_tan
        d = ScalarField(grid, DIRICHLET_SINE, coeffs=g_tan.coeffs * pre)
        return _masked(tangent(w, d), mask)

    def row(it: int, ev_j, gn_j, w) -> TraceRow:
        omega, mu = _row_multipliers(spec.case, spec, w, ev_j.grad)
        c1 = norm_l2(w) ** 2 - 1.0
        c2 = charge_moment(w, spec.q) - spec.alpha if spec.case == NEUMANN else 0.0
        return TraceRow(it, ev_j.J, gn_j, omega, mu, c1, c2)

    ev = evaluate(u, spec)
    trace: list[TraceRow] = []
    status = MAX_ITER
    prev: tuple[np.ndarray, np.ndarray] | None = None
    rg = _masked(tangent(u, ev.grad), mask)
    gn = norm_l2(rg)
    d = direction(u, rg)
    slope = inner_l2(rg, d)
    t = 1.0 / (1.0 + gn)
    for it in range(opts.max_iter):
        trace.append(row(it, ev, gn, u))
        if gn <= opts.tol_grad:
            status = CONVERGED
            break
        if opts.step_rule == STEP_ADAPTIVE and prev is not None:
            du = u.coeffs - prev[0]
            dd = d.coeffs - prev[1]
            denom = float(np.sum(du * dd))
            t = float(np.sum(du * du)) / denom if denom > 0.0 else 1.0 / (1.0 + gn)
            t = min(max(t, 1e-10), 1e4)
        accepted = None
        step = t
        floor = 5e-14 * (1.0 + abs(ev.J))
        for _ in range(80):
            try:
                cand = retract(u - step * d)
            except (RetractionFailure, DegenerateInput):
                step *= opts.backtrack
                continue
            ev_cand = evaluate(cand, spec)
            wanted = opts.armijo * step * slope
            if ev_cand.J <= ev.J - wanted:
                accepted = (cand, ev_cand)
                break
            if wanted <= floor and ev_cand.J <= ev.J + 1e-13:
                accepted = (cand, ev_cand)
                break
            if opts.step_rule == STEP_FIXED:
                break
            step *= opts.backtrack
        if accepted is None:
            status = STALLED
            break
        prev = (u.coeffs.copy(), d.coeffs.copy())
        u, ev = accepted
        if allow_abs and float(u.values.min()) < 0.0:
            cand = _abs_move(u)
            ev_cand = evaluate(cand, spec)
            if ev_cand.J <= ev.J:
                u, ev = cand, ev_cand
                prev = None
        rg = _masked(tangent(u, ev.grad), mask)
        gn = norm_l2(rg)
        d = direction(u, rg)
        slope = inner_l2(rg, d)
    else:
        trace.append(row(opts.max_iter, ev, gn, u))
    if status != CONVERGED and gn <= opts.tol_grad:
        status = CONVERGED
    return u, ev, gn, trace, status


def _package(spec: ProblemSpec, u, ev, gn, trace, status, restarts) -> Solution:
    if spec.case == NAVIER:
        mult = multiplier_navier(u, spec)
        phi_total = ev.phi
        residual_charge = 0.0
    else:
        mult = multipliers_neumann(u, spec)
        residual_charge = abs(charge_moment(u, spec.q) - spec.alpha)
        total = ev.phi.coeffs.copy()
        if spec.chi is not None:
            total = total + spec.chi.coeffs
        total[0, 0, 0] += mult.mu
        phi_total = ScalarField(u.grid, ev.phi.boundary_class, coeffs=total)
    return Solution(
        case=spec.case, u=u, phi=phi_total, phi_reduced=ev.phi,
        multipliers=mult, J=ev.J, grad_norm=gn,
        residual_sphere=abs(norm_l2(u) - 1.0),
        residual_charge=residual_charge,
        trace=tuple(trace), converged=(status == CONVERGED), status=status,
        restart_values=tuple(restarts))


def minimize_navier(spec: ProblemSpec, opts: SolverOptions) -> Solution:
    """Projected-gradient ground state on the unit sphere.

    Starts from the nodal absolute value of a random band-limited field
    and keeps replacing u by the renormalized |u| whenever that does not
    increase J, so converged ground states come out signless.  Under a
    symmetry restriction the absolute-value move is disabled and the
    initial field is projected onto the odd subspace.
    """
    if spec.case != NAVIER:
        raise InvalidParameter("minimize_navier needs a sphere-vanishing spec")
    grid = _spec_grid(spec)
    mask = None
    if opts.symmetry_axis is not None:
        if spec.q is not None:
            _check_even_profile(spec.q, grid, opts.symmetry_axis)
        mask = _odd_mask(grid, opts.symmetry_axis)
    best = None
    finals = []
    for start in range(opts.multistart):
        rng = np.random.default_rng(opts.seed + 1000003 * start)
        raw = random_band_field(grid, DIRICHLET_SINE, rng)
        if opts.symmetry_axis is None:
            u0 = ScalarField(grid, DIRICHLET_SINE, values=np.abs(raw.values))
        else:
            u0 = raw
        result = _descend(spec, opts, u0, tangent_project_B, project_sphere,
                          mask, allow_abs=(opts.symmetry_axis is None))
        finals.append(result[1].J)
        if best is None or result[1].J < best[1].J:
            best = result
    return _package(spec, *best, finals)


def _spec_grid(spec: ProblemSpec) -> Grid:
    if spec.grid is None:
        raise InvalidParameter("the problem data must carry a grid to run a solve")
    return spec.grid


def minimize_neumann(spec: ProblemSpec, opts: SolverOptions) -> Solution:
    """Constrained ground state on the charge level set.

    Initial points come from the localized disjoint-bump construction,
    band-projected and Newton-restored onto the constraint set; the
    descent then alternates tangent steps with the two-constraint
    retraction, so the charge level holds along the whole accepted
    trace.
    """
    if spec.case != NEUMANN:
        raise InvalidParameter("minimize_neumann needs a natural-flux spec")
    if spec.q is None:
        raise InvalidParameter("the natural-flux case needs a charge profile")
    grid = _spec_grid(spec)
    report = validate_alpha(spec.q, spec.alpha, grid)
    if report.verdict != FEASIBLE:
        raise LocalizationFailure(
            f"charge level alpha={spec.alpha} is {report.verdict} "
            f"(range [{report.q_min}, {report.q_max}])")
    mask = None
    if opts.symmetry_axis is not None:
        _check_even_profile(spec.q, grid, opts.symmetry_axis)
        mask = _odd_mask(grid, opts.symmetry_axis)
    bumps = feasible_point(spec.q, spec.alpha, opts.multistart, grid)

    def tangent(u, g):
        return tangent_project_M(u, g, spec.q)

    def retract(u):
        return retract_M(u, spec.alpha, spec.q)

    best = None
    finals = []
    for start in range(opts.multistart):
        rng = np.random.default_rng(opts.seed + 1000003 * start)
        u0 = _sine_projection_of_nodal(bumps[start])
        noise = random_band_field(grid, DIRICHLET_SINE, rng)
        u0 = project_sphere(u0) + (0.01 / max(norm_l2(noise), 1e-30)) * noise
        result = _descend(spec, opts, u0, tangent, retract, mask, allow_abs=False)
        finals.append(result[1].J)
        if best is None or result[1].J < best[1].J:
            best = result
    return _package(spec, *best, finals)


def _minimize(spec: ProblemSpec, opts: SolverOptions) -> Solution:
    if spec.case == NAVIER:
        return minimize_navier(spec, opts)
    return minimize_neumann(spec, opts)


def excited_states(spec: ProblemSpec, opts: SolverOptions, classes) -> list[Solution]:
    """Ground state plus one restricted minimizer per odd-reflection class.

    ``classes`` lists axes (0, 1 or 2).  Returns [ground, class_0, ...]
    with the energy ordering J(ground) <= J(excited) enforced; the
    restricted minimizers are critical points of the full energy by
    symmetric criticality, valid because the profile is even in the
    reflected axis.
    """
    classes = list(classes)
    grid = _spec_grid(spec)
    if spec.q is not None:
        for ax in classes:
            _check_even_profile(spec.q, grid, ax)
    ground = _minimize(spec, replace(opts, symmetry_axis=None))
    out = [ground]
    for ax in classes:
        sol = _minimize(spec, replace(opts, symmetry_axis=ax))
        if ground.J > sol.J + 1e-12 * (1.0 + abs(sol.J)):
            raise CertificateFailure(
                f"energy ordering violated: ground J={ground.J} exceeds "
                f"odd-axis-{ax} J={sol.J}")
        out.append(sol)
    return out


@dataclass(frozen=True)
class GNReport:
    """Empirical interpolation-inequality constants over a random corpus."""

    p: float
    r: float
    n: int
    samples: int
    max_ratio: float
    mean_ratio: float
    scale_defect: float


def gn_probe(grid: Grid, p: float, r: float, samples: int = 100,
             seed: int = 0) -> GNReport:
    """Ratio |u|_p^p / (||u||_{H1}^{p-r} |u|_2^r) over random fields.

    The admissible window p-2 < r < 3(1 - p/6) is the one under which
    the ratio stays bounded with a subquadratic sphere exponent; both
    sides are p-homogeneous, so the ratio is scale invariant and the
    probe checks that too.
    """
    if not P_MIN < p < P_MAX:
        raise InvalidParameter(f"exponent p={p} outside ({P_MIN}, {P_MAX:.6f})")
    lo, hi = p - 2.0, 3.0 * (1.0 - p / 6.0)
    if not lo < r < hi:
        raise InvalidExponent(f"r={r} outside the open window ({lo}, {hi})")
    rng = np.random.default_rng(seed)

    def ratio(u: ScalarField) -> float:
        num = norm_lp(u, p) ** p
        w = np.hypot(norm_h10(u), norm_l2(u))
        return num / (w ** (p - r) * norm_l2(u) ** r)

    ratios = np.empty(samples)
    defect = 0.0
    for i in range(samples):
        u = random_band_field(grid, DIRICHLET_SINE, rng)
        ratios[i] = ratio(u)
        if i < 5:
            defect = max(defect, abs(ratio(5.0 * u) / ratios[i] - 1.0))
    return GNReport(p=p, r=r, n=grid.n, samples=samples,
                    max_ratio=float(ratios.max()), mean_ratio=float(ratios.mean()),
                    scale_defect=defect)


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.value <= self.tol


@dataclass(frozen=True)
class VerificationReport:
    checks: tuple[Check, ...]
    diagnostics: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def summary(self) -> str:
        lines = []
        for c in self.checks:
            tag = "pass" if c.passed else "FAIL"
            lines.append(f"[{tag}] {c.name}: {c.value:.3e} (tol {c.tol:.1e})")
        return "\n".join(lines)


def verify_solution(sol: Solution, spec: ProblemSpec,
                    tol_constraint: float = 1e-8,
                    tol_stationarity: float = 1e-6,
                    tol_identity: float = 1e-8) -> VerificationReport:
    """Recompute every residual a claimed critical point must satisfy.

    Pure report: nothing raises, each check carries its value and
    tolerance.  The stationarity residual uses the multipliers stored
    in the solution, so a perturbed omega shows up immediately.
    """
    u = sol.u
    ev = evaluate(u, spec)
    checks = []
    checks.append(Check("sphere-constraint", abs(norm_l2(u) - 1.0), tol_constraint))
    stat = ev.grad - sol.omega * u
    if spec.case == NEUMANN:
        checks.append(Check("charge-constraint",
                            abs(charge_moment(u, spec.q) - spec.alpha), tol_constraint))
        stat = stat + sol.mu * charge_gradient_field(u, spec.q)
        tangent_norm = norm_l2(tangent_project_M(u, ev.grad, spec.q)) \
            if abs(norm_l2(u) - 1.0) <= 1e-8 else float("inf")
    else:
        tangent_norm = norm_l2(tangent_project_B(u, ev.grad)) \
            if abs(norm_l2(u) - 1.0) <= 1e-8 else float("inf")
    checks.append(Check("stationarity", norm_l2(stat), tol_stationarity))
    checks.append(Check("gradient-norm-recomputation",
                        abs(tangent_norm - sol.grad_norm), 1e-10))
    if spec.q is not None:
        phi_ref = reduce_potential(u, spec.q, spec.case)
        rhs = apply_operator(phi_ref)
        res = apply_operator(sol.phi_reduced) - rhs
        checks.append(Check("potential-equation",
                            norm_l2(res) / (1.0 + norm_l2(rhs)), tol_identity))
        checks.append(Check("reduction-identity",
                            reduction_identity_residual(u, spec.q, spec.case),
                            tol_identity))
        diag_ratio = phi_bound_ratio(u, spec.q, spec.case)
    else:
        checks.append(Check("potential-equation", norm_l2(sol.phi_reduced), tol_identity))
        diag_ratio = 0.0
    diagnostics = {
        "J": sol.J,
        "omega": sol.omega,
        "mu": sol.mu,
        "omega_tilde": sol.multipliers.omega_tilde,
        "phi_bound_ratio": diag_ratio,
        "status": sol.status,
    }
    if spec.case == NEUMANN and sol.mu is not None:
        diagnostics["omega_minus_mu_alpha"] = sol.multipliers.divergence_diagnostic(spec.alpha)
    return VerificationReport(checks=tuple(checks), diagnostics=diagnostics)
