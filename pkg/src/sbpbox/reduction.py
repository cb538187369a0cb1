"""The electrostatic reduction map u -> Phi(u) and its identities.

For a wave-function density u^2 the electrostatic potential solves the
fourth-order problem with source q u^2: under the mixed second/fourth
order boundary conditions this is ``reduce_dirichlet`` (sine class),
under the natural zero-flux conditions it is ``reduce_neumann``
(zero-mean cosine class, with the compatibility mean removed).

All couplings are evaluated with exact dealiased products, so the
defining weak identity

    int q u^2 Phi(u) = ||Phi(u)||_bih^2

holds at machine precision on the discrete spaces; the test-suite
checks it against independent high-order quadrature as well.
"""

from __future__ import annotations

import numpy as np

from . import basis
from .charge import ChargeProfile
from .exceptions import DegenerateInput, InvalidParameter, UnsupportedClass
from .grid import (
    DIRICHLET_SINE,
    NEUMANN_COSINE,
    Grid,
    ScalarField,
    norm_bih,
    norm_h10,
)
from .operators import solve_navier, solve_neumann_zero_mean

NAVIER = "navier"
NEUMANN = "neumann"

__all__ = [
    "NAVIER",
    "NEUMANN",
    "charge_density_coeffs",
    "reduce_dirichlet",
    "reduce_neumann",
    "e_functional",
    "reduction_identity_residual",
    "phi_bound_ratio",
    "coupling_integral",
]


def _check_u(u: ScalarField):
    if u.boundary_class != DIRICHLET_SINE:
        raise UnsupportedClass("wave functions live in the dirichlet-sine class")


def charge_density_coeffs(u: ScalarField, q: ChargeProfile, keep_band: int) -> np.ndarray:
    """Exact cosine coefficients of q u^2 up to keep_band per axis."""
    family, coeffs = basis.product_coefficients(
        [(u.coeffs, basis.SINE), (u.coeffs, basis.SINE), (q.coeffs, basis.COSINE)],
        u.grid.lengths, keep_band)
    return coeffs


def coupling_integral(u: ScalarField, q: ChargeProfile, phi: ScalarField) -> float:
    """Exact integral of q u^2 phi over the box."""
    fam = basis.SINE if phi.boundary_class == DIRICHLET_SINE else basis.COSINE
    return basis.integral_of_product(
        [(u.coeffs, basis.SINE), (u.coeffs, basis.SINE),
         (q.coeffs, basis.COSINE), (phi.coeffs, fam)], u.grid.lengths)


def reduce_dirichlet(u: ScalarField, q: ChargeProfile) -> ScalarField:
    """Potential with phi = Laplace phi = 0 on the faces.

    The density q u^2 is even-parity; its exact projection onto the sine
    band provides the Galerkin right-hand side, so the returned field is
    the discrete weak solution against every sine test function.
    Depends on u only through u^2, hence Phi(u) = Phi(-u) = Phi(|u|).
    """
    _check_u(u)
    grid = u.grid
    total_band = 2 * (grid.n - 1) + max(q.band)
    dens = charge_density_coeffs(u, q, total_band)
    proj = basis.sine_from_cosine_matrix(grid.n - 1, total_band)
    rhs = basis.apply_axis_matrices(dens, [proj, proj, proj])
    return solve_navier(ScalarField(grid, DIRICHLET_SINE, coeffs=rhs))


def reduce_neumann(u: ScalarField, q: ChargeProfile) -> ScalarField:
    """Zero-mean potential with natural (zero-flux) conditions.

    Solves against the mean-corrected source q u^2 - mean(q u^2); the
    mean subtraction is what makes the zero-flux problem solvable for
    every u.
    """
    _check_u(u)
    grid = u.grid
    dens = charge_density_coeffs(u, q, grid.n - 1).copy()
    dens[0, 0, 0] = 0.0
    return solve_neumann_zero_mean(ScalarField(grid, NEUMANN_COSINE, coeffs=dens))


def reduce(u: ScalarField, q: ChargeProfile, case: str) -> ScalarField:
    if case == NAVIER:
        return reduce_dirichlet(u, q)
    if case == NEUMANN:
        return reduce_neumann(u, q)
    raise InvalidParameter(f"unknown boundary case {case!r}")


def e_functional(phi: ScalarField, u: ScalarField, q: ChargeProfile) -> float:
    """E(phi) = 1/2 ||phi||_bih^2 - int q u^2 phi.

    Strictly convex in phi, minimized by the reduction of u, where its
    value is -1/2 ||Phi(u)||_bih^2 < 0 for nonzero coupling.
    """
    _check_u(u)
    if phi.grid != u.grid:
        raise InvalidParameter("phi and u live on different grids")
    return 0.5 * norm_bih(phi) ** 2 - coupling_integral(u, q, phi)


def reduction_identity_residual(u: ScalarField, q: ChargeProfile, case: str = NAVIER) -> float:
    """Relative defect of int q u^2 Phi = ||Phi||_bih^2 for Phi = Phi(u)."""
    phi = reduce(u, q, case)
    nb = norm_bih(phi) ** 2
    return abs(coupling_integral(u, q, phi) - nb) / (1.0 + nb)


def phi_bound_ratio(u: ScalarField, q: ChargeProfile, case: str = NAVIER) -> float:
    """||Phi(u)||_bih / ||u||_h10^2, the empirical boundedness constant.

    Invariant under scaling of u (both numerator and denominator are
    quartic); no explicit value is asserted anywhere, only stability of
    the ratio under refinement.
    """
    nh = norm_h10(u)
    if nh == 0.0:
        raise DegenerateInput("phi_bound_ratio needs a nonzero u")
    phi = reduce(u, q, case)
    return norm_bih(phi) / nh**2
