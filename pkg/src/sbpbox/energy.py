"""Energy functionals, gradients, and Lagrange-multiplier recovery.

Two boundary regimes share one structure.  With Phi(u) the electrostatic
reduction of the current density (see ``reduction``):

* mixed conditions ("navier"):
    J(u) = 1/2 ||grad u||^2 - (1/p) |u|_p^p + 1/4 ||Phi(u)||_bih^2
* natural conditions ("neumann"), with the inhomogeneity carried by a
  fixed zero-mean field chi:
    J(u) = 1/2 ||grad u||^2 - (1/p) |u|_p^p + 1/4 ||Phi(u)||_bih^2
           + 1/2 int q chi u^2

Both are envelope values of the full functional F(u, phi) at its
phi-stationary point, so the u-gradient of J is the partial u-gradient
of F: there is no Phi'(u) term, and finite-difference checks of grad_J
hold to roundoff by construction.

The p-power term is the only non-polynomial piece; it is integrated on
a fixed midpoint grid with twice the resolution, and its gradient is
the exact quadrature adjoint, keeping value and gradient consistent to
the last bit.  Every polynomial coupling is evaluated with exact
dealiased projections.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import basis
from .charge import ChargeProfile
from .exceptions import (
    CompatibilityViolation,
    DegenerateConstraints,
    GridMismatch,
    InvalidParameter,
    OffManifold,
    UnsupportedClass,
)
from .grid import (
    DIRICHLET_SINE,
    NEUMANN_COSINE,
    Grid,
    ScalarField,
    inner_l2,
    norm_bih,
    norm_h10,
    norm_l2,
)
from .operators import ChiField
from .reduction import (
    NAVIER,
    NEUMANN,
    coupling_integral,
    reduce_dirichlet,
    reduce_neumann,
)

P_MIN = 2.0
P_MAX = 10.0 / 3.0

__all__ = [
    "P_MIN",
    "P_MAX",
    "ProblemSpec",
    "Multipliers",
    "Evaluation",
    "evaluate",
    "energy_F",
    "energy_J",
    "grad_J",
    "multiplier_navier",
    "multipliers_neumann",
    "charge_moment",
    "charge_gradient_field",
]


@dataclass
class ProblemSpec:
    """Problem data: exponent, boundary regime, coupling, inhomogeneity.

    ``q=None`` switches the electrostatic coupling off entirely (the
    linear benchmarks); ``nonlinearity_enabled=False`` drops the p-power
    term, which is the regime where the quadratic diagnostic identities
    are exact.  ``chi``/``alpha`` belong to the natural-conditions case;
    chi must be zero-mean and, when it carries flux data, its balance
    constant must agree with alpha.
    """

    p: float = 2.5
    a: float = 1.0
    case: str = NAVIER
    q: ChargeProfile | None = None
    chi: ScalarField | None = None
    alpha: float = 0.0
    nonlinearity_enabled: bool = True
    grid: Grid | None = None
    _cache: dict = dc_field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.grid is not None and self.chi is not None \
                and self.chi.grid is not self.grid:
            raise GridMismatch("chi lives on a different grid than the problem declares")
        if not P_MIN < self.p < P_MAX:
            raise InvalidParameter(
                f"exponent p must lie in ({P_MIN}, {P_MAX:.6f}), got {self.p}")
        if self.a != 1.0:
            raise InvalidParameter(
                "the box solvers implement the a=1 normalization of the fourth-order "
                "term; general a is available in the radial kernel module only")
        if self.case not in (NAVIER, NEUMANN):
            raise InvalidParameter(f"unknown case {self.case!r}")
        if self.case == NAVIER:
            if self.chi is not None:
                raise InvalidParameter("chi is a natural-conditions datum")
        else:
            if self.chi is not None:
                if self.chi.boundary_class != NEUMANN_COSINE:
                    raise UnsupportedClass("chi must be a neumann-cosine field")
                if abs(self.chi.mean) > 1e-10:
                    raise InvalidParameter(f"chi must be zero-mean, got mean {self.chi.mean:.3e}")
                if isinstance(self.chi, ChiField) and \
                        abs(self.chi.alpha - self.alpha) > 1e-10 * (1.0 + abs(self.alpha)):
                    raise CompatibilityViolation(
                        f"chi carries flux balance {self.chi.alpha}, spec declares alpha={self.alpha}")

    def p_power_grid(self, grid: Grid) -> int:
        return 2 * grid.n


@dataclass(frozen=True)
class Multipliers:
    """Lagrange multipliers at a (near-)critical point.

    ``omega`` pairs with the mass constraint; ``mu`` with the charge
    constraint (natural-conditions case only).  ``omega_tilde`` is the
    p-term-free diagnostic combination ||grad u||^2 + ||Phi||_bih^2,
    which coincides with omega exactly when the nonlinearity is off.
    """

    omega: float
    mu: float | None = None
    omega_tilde: float | None = None

    def divergence_diagnostic(self, alpha: float) -> float:
        if self.mu is None:
            raise InvalidParameter("divergence diagnostic needs the two-multiplier case")
        return self.omega - self.mu * alpha


@dataclass(frozen=True)
class Evaluation:
    """One full functional evaluation at u: value, gradient, potential."""

    J: float
    grad: ScalarField
    phi: ScalarField
    kinetic: float
    p_term: float
    phi_term: float
    chi_term: float


def _check_wave(u: ScalarField):
    if u.boundary_class != DIRICHLET_SINE:
        raise UnsupportedClass("wave functions live in the dirichlet-sine class")


def _laplacian_tensor(grid: Grid) -> np.ndarray:
    axes = [(np.pi * np.arange(1, grid.n) / L) ** 2 for L in grid.lengths]
    return axes[0][:, None, None] + axes[1][None, :, None] + axes[2][None, None, :]


def _chi_cosine_extension(spec: ProblemSpec, grid: Grid) -> np.ndarray | None:
    """Exact cosine coefficients of chi wide enough for all couplings.

    Products q*chi*(band-limited) need chi content up to twice the wave
    band plus the charge band; a lift-carrying chi supplies its exact
    extension, a plain cosine field simply is its own coefficients.
    """
    if spec.chi is None:
        return None
    key = ("chi_ext", grid.n, id(spec.chi))
    if key not in spec._cache:
        need = 2 * (grid.n - 1) + (max(spec.q.band) if spec.q is not None else 0)
        if isinstance(spec.chi, ChiField):
            ext = spec.chi.cosine_extension(need)
        else:
            if spec.chi.grid != grid:
                raise GridMismatch("chi and u live on different grids")
            ext = spec.chi.coeffs
        spec._cache[key] = ext
    return spec._cache[key]


def _p_power(u: ScalarField, p: float):
    """(1/p) int |u|^p on the doubled midpoint grid, plus its adjoint gradient.

    The gradient is the exact derivative of the quadrature value with
    respect to the coefficients of u, i.e. the band projection of
    |u|^(p-2) u sampled on the same grid; |u|^(p-2) u is extended by 0
    through u = 0.
    """
    grid = u.grid
    m = 2 * grid.n
    evals = [basis.eval_matrix(L, basis.midpoint_nodes(L, m), basis.SINE, grid.n - 1)
             for L in grid.lengths]
    vals = basis.apply_axis_matrices(u.coeffs, evals)
    absu = np.abs(vals)
    cell = grid.domain.volume / m**3
    value = cell * np.sum(absu**p) / p
    with np.errstate(invalid="ignore"):
        dens = np.where(absu > 0.0, absu ** (p - 2.0) * vals, 0.0)
    projs = [basis.midpoint_projection_matrix(L, m, basis.SINE, grid.n - 1)
             for L in grid.lengths]
    grad_coeffs = basis.apply_axis_matrices(dens, projs)
    return value, grad_coeffs


def _coupling_gradient(u: ScalarField, spec: ProblemSpec, phi: ScalarField) -> np.ndarray:
    """Sine-band Riesz representative of v -> int q (phi + chi) u v."""
    grid = u.grid
    lengths = grid.lengths
    band = grid.n - 1
    out = np.zeros(grid.sine_shape)
    qc = spec.q.coeffs
    if spec.case == NAVIER:
        # q phi u is even-parity; project its cosine content onto the
        # sine band with the closed-form cross-parity matrix
        total = band + band + max(spec.q.band)
        fam, dens = basis.product_coefficients(
            [(qc, basis.COSINE), (phi.coeffs, basis.SINE), (u.coeffs, basis.SINE)],
            lengths, total)
        proj = basis.sine_from_cosine_matrix(band, total)
        out += basis.apply_axis_matrices(dens, [proj, proj, proj])
    else:
        fam, g_phi = basis.product_coefficients(
            [(qc, basis.COSINE), (phi.coeffs, basis.COSINE), (u.coeffs, basis.SINE)],
            lengths, band)
        out += g_phi
        ext = _chi_cosine_extension(spec, grid)
        if ext is not None:
            fam, g_chi = basis.product_coefficients(
                [(qc, basis.COSINE), (ext, basis.COSINE), (u.coeffs, basis.SINE)],
                lengths, band)
            out += g_chi
    return out


def _chi_coupling_value(u: ScalarField, spec: ProblemSpec) -> float:
    ext = _chi_cosine_extension(spec, u.grid)
    if ext is None or spec.q is None:
        return 0.0
    return basis.integral_of_product(
        [(spec.q.coeffs, basis.COSINE), (ext, basis.COSINE),
         (u.coeffs, basis.SINE), (u.coeffs, basis.SINE)], u.grid.lengths)


def evaluate(u: ScalarField, spec: ProblemSpec) -> Evaluation:
    """Value and gradient of the reduced functional at u, one pass."""
    _check_wave(u)
    grid = u.grid
    lam = _laplacian_tensor(grid)
    kinetic = 0.5 * norm_h10(u) ** 2
    grad_c = lam * u.coeffs

    if spec.q is not None:
        phi = reduce_dirichlet(u, spec.q) if spec.case == NAVIER else reduce_neumann(u, spec.q)
        phi_term = 0.25 * norm_bih(phi) ** 2
        grad_c = grad_c + _coupling_gradient(u, spec, phi)
    else:
        phi = ScalarField(
            grid,
            DIRICHLET_SINE if spec.case == NAVIER else NEUMANN_COSINE,
            coeffs=np.zeros(grid.sine_shape if spec.case == NAVIER else grid.cosine_shape))
        phi_term = 0.0

    chi_term = 0.5 * _chi_coupling_value(u, spec) if spec.case == NEUMANN else 0.0

    if spec.nonlinearity_enabled:
        p_val, p_grad = _p_power(u, spec.p)
        grad_c = grad_c - p_grad
    else:
        p_val = 0.0

    J = kinetic - p_val + phi_term + chi_term
    grad = ScalarField(grid, DIRICHLET_SINE, coeffs=grad_c)
    return Evaluation(J=J, grad=grad, phi=phi, kinetic=kinetic, p_term=p_val,
                      phi_term=phi_term, chi_term=chi_term)


def energy_J(u: ScalarField, spec: ProblemSpec) -> float:
    return evaluate(u, spec).J


def grad_J(u: ScalarField, spec: ProblemSpec) -> ScalarField:
    return evaluate(u, spec).grad


def energy_F(u: ScalarField, phi: ScalarField, spec: ProblemSpec) -> float:
    """The unreduced functional F(u, phi) at an arbitrary potential phi.

    Concave in phi; its phi-stationary value reproduces energy_J.  The
    natural-conditions case carries the q(phi + chi)u^2 coupling and the
    -(alpha / 2|Omega|) int phi term, included verbatim even though it
    vanishes on zero-mean phi.
    """
    _check_wave(u)
    expected = DIRICHLET_SINE if spec.case == NAVIER else NEUMANN_COSINE
    if phi.boundary_class != expected:
        raise UnsupportedClass(
            f"{spec.case} potentials live in the {expected} class, got {phi.boundary_class}")
    if phi.grid != u.grid:
        raise GridMismatch("u and phi live on different grids")
    if spec.case == NEUMANN and abs(phi.mean) > 1e-10:
        raise InvalidParameter("natural-conditions potentials must be zero-mean")

    value = 0.5 * norm_h10(u) ** 2 - 0.25 * norm_bih(phi) ** 2
    if spec.q is not None:
        value += 0.5 * coupling_integral(u, spec.q, phi)
    if spec.case == NEUMANN:
        value += 0.5 * _chi_coupling_value(u, spec)
        volume_mean = phi.coeffs[0, 0, 0] * u.grid.domain.volume
        value -= 0.5 * spec.alpha / u.grid.domain.volume * volume_mean
    if spec.nonlinearity_enabled:
        p_val, _ = _p_power(u, spec.p)
        value -= p_val
    return value


def charge_moment(u: ScalarField, q: ChargeProfile) -> float:
    """Exact int q u^2 over the box."""
    return basis.integral_of_product(
        [(q.coeffs, basis.COSINE), (u.coeffs, basis.SINE), (u.coeffs, basis.SINE)],
        u.grid.lengths)


def charge_gradient_field(u: ScalarField, q: ChargeProfile) -> ScalarField:
    """Band projection of q u: the discrete gradient direction of int q u^2 (halved)."""
    fam, coeffs = basis.product_coefficients(
        [(q.coeffs, basis.COSINE), (u.coeffs, basis.SINE)], u.grid.lengths, u.grid.n - 1)
    return ScalarField(u.grid, DIRICHLET_SINE, coeffs=coeffs)


def multiplier_navier(u: ScalarField, spec: ProblemSpec) -> Multipliers:
    """omega from J'(u) = omega u on the unit sphere: omega = <grad_J(u), u>."""
    nu = norm_l2(u)
    if abs(nu - 1.0) > 1e-8:
        raise OffManifold(f"|u|_2 = {nu} is off the unit sphere")
    ev = evaluate(u, spec)
    omega = inner_l2(ev.grad, u)
    omega_tilde = 2.0 * ev.kinetic + 4.0 * ev.phi_term
    return Multipliers(omega=omega, mu=None, omega_tilde=omega_tilde)


def multipliers_neumann(u: ScalarField, spec: ProblemSpec) -> Multipliers:
    """(omega, mu) from the 2x2 Gram system of the two constraint gradients.

    Criticality on the doubly constrained set means
    grad_J(u) = omega u - mu q u in the discrete space; testing against
    u and against the band projection of q u gives the normal equations
    solved here.  A Gram condition number above 1e12 means the
    constraint gradients are (numerically) parallel, i.e. (q - alpha) u
    is degenerate, and the multipliers are not identifiable.
    """
    if spec.q is None:
        raise InvalidParameter("the two-multiplier case needs a charge profile")
    nu = norm_l2(u)
    if abs(nu - 1.0) > 1e-8:
        raise OffManifold(f"|u|_2 = {nu} is off the unit sphere")
    moment = charge_moment(u, spec.q)
    if abs(moment - spec.alpha) > 1e-6 * (1.0 + abs(spec.alpha)):
        raise OffManifold(
            f"charge moment {moment} is off the target level alpha={spec.alpha}")
    ev = evaluate(u, spec)
    qu = charge_gradient_field(u, spec.q)
    g11 = inner_l2(u, u)
    g12 = inner_l2(qu, u)
    g22 = inner_l2(qu, qu)
    gram = np.array([[g11, g12], [g12, g22]])
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > 1e12:
        raise DegenerateConstraints(
            f"constraint gradients nearly parallel (Gram condition {cond:.3e}); "
            "a constant charge profile always triggers this")
    rhs = np.array([inner_l2(ev.grad, u), inner_l2(ev.grad, qu)])
    omega, neg_mu = np.linalg.solve(gram, rhs)
    ev_tilde = 2.0 * ev.kinetic + 4.0 * ev.phi_term
    return Multipliers(omega=float(omega), mu=float(-neg_mu), omega_tilde=ev_tilde)
