"""Coupling-coefficient profiles q(x).

The coupling coefficient in the electrostatic sub-problem is a
continuous, not identically zero function on the closed box; it may
change sign.  Profiles here are stored as low-order cosine polynomials
(tensor cosine coefficients), which keeps every product q * u * v of
band-limited fields exactly representable on padded grids and therefore
keeps the weak forms in the rest of the package quadrature-error free.

A profile evaluates on either node set of a grid and reports simple
range information used by feasibility checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import basis
from .exceptions import DegenerateInput, InvalidParameter
from .grid import (
    CENTERED,
    NEUMANN_COSINE,
    NODAL,
    BoxDomain,
    Grid,
    ScalarField,
)

__all__ = [
    "ChargeProfile",
    "constant_profile",
    "separable_cosine_profile",
    "two_well_profile",
    "profile_from_name",
    "BUILTIN_PROFILES",
]


@dataclass(frozen=True)
class ChargeProfile:
    """Cosine-polynomial coupling coefficient on a box domain.

    ``coeffs[b1, b2, b3]`` multiplies ``prod_i cos(b_i pi x_i / L_i)``.
    The tensor is small (band = shape - 1 per axis, typically <= 2).
    """

    domain: BoxDomain
    coeffs: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        c = np.ascontiguousarray(self.coeffs, dtype=float)
        if c.ndim != 3:
            raise InvalidParameter("charge coefficients must be a rank-3 tensor")
        if not np.all(np.isfinite(c)):
            raise InvalidParameter("non-finite charge coefficients")
        if np.all(c == 0.0):
            raise DegenerateInput("coupling coefficient is identically zero")
        object.__setattr__(self, "coeffs", c)

    @property
    def band(self) -> tuple[int, int, int]:
        return tuple(s - 1 for s in self.coeffs.shape)

    def eval_on(self, nodes_per_axis) -> np.ndarray:
        mats = [basis.eval_matrix(self.domain.lengths[ax], nodes_per_axis[ax],
                                  basis.COSINE, self.coeffs.shape[ax] - 1)
                for ax in range(3)]
        return basis.apply_axis_matrices(self.coeffs, mats)

    def nodal(self, grid: Grid, node_set: str = CENTERED) -> ScalarField:
        if grid.domain != self.domain:
            raise InvalidParameter("grid domain differs from profile domain")
        nodes = [grid.nodes(node_set, ax) for ax in range(3)]
        return ScalarField(grid, NODAL, values=self.eval_on(nodes), node_set=node_set)

    def as_cosine_field(self, grid: Grid) -> ScalarField:
        """Embed into the grid's cosine class (band must fit)."""
        if any(b > grid.n - 1 for b in self.band):
            raise InvalidParameter("profile band exceeds grid band")
        c = np.zeros(grid.cosine_shape)
        s = self.coeffs.shape
        c[: s[0], : s[1], : s[2]] = self.coeffs
        return ScalarField(grid, NEUMANN_COSINE, coeffs=c)

    @property
    def mean(self) -> float:
        return float(self.coeffs[0, 0, 0])

    @property
    def integral(self) -> float:
        return self.mean * self.domain.volume

    def extrema(self, samples: int = 64) -> tuple[float, float]:
        """Approximate (min, max) over the closed box via dense sampling.

        Cosine polynomials of band b vary on scale L/b, so a 64^3 sample
        including the faces brackets the range to ample accuracy for the
        sign and feasibility diagnostics that consume it.
        """
        nodes = [np.linspace(0.0, L, samples) for L in self.domain.lengths]
        v = self.eval_on(nodes)
        return float(v.min()), float(v.max())

    def sign_changes(self) -> bool:
        lo, hi = self.extrema()
        return lo < 0.0 < hi

    def level_fraction(self, level: float = 0.0, samples: int = 48) -> float:
        """Fraction of sampled volume with q > level."""
        nodes = [np.linspace(0.0, L, samples) for L in self.domain.lengths]
        v = self.eval_on(nodes)
        return float(np.mean(v > level))

    def near_level_fraction(self, grid: Grid, level: float, delta: float,
                            node_set: str = CENTERED) -> float:
        """Fraction of grid nodes with |q - level| < delta.

        A discrete stand-in for the measure of the level set q = level;
        feasibility of the charge constraint needs this to vanish as
        delta does.
        """
        v = self.nodal(grid, node_set).values
        return float(np.mean(np.abs(v - level) < delta))

    def is_symmetric_in_axis(self, axis: int, tol: float = 1e-12) -> bool:
        """Even about the midplane of the given axis.

        A cosine mode cos(b pi x / L) is even about x = L/2 iff b is
        even, so symmetry reduces to vanishing odd-mode content.
        """
        sl = [slice(None)] * 3
        sl[axis] = slice(1, None, 2)
        return bool(np.abs(self.coeffs[tuple(sl)]).max(initial=0.0) <= tol)


def constant_profile(domain: BoxDomain, value: float = 1.0) -> ChargeProfile:
    c = np.full((1, 1, 1), float(value))
    return ChargeProfile(domain, c, name="constant")


def separable_cosine_profile(domain: BoxDomain, amplitude: float = 1.0,
                             offset: float = 0.0) -> ChargeProfile:
    """offset + amplitude * prod_i cos(2 pi x_i / L_i)."""
    c = np.zeros((3, 3, 3))
    c[0, 0, 0] = offset
    c[2, 2, 2] = amplitude
    return ChargeProfile(domain, c, name="separable_cosine")


def two_well_profile(domain: BoxDomain, c0: float = 0.0, c1: float = 1.0,
                     c2: float = 0.5) -> ChargeProfile:
    """c0 + c1 cos(2 pi x1 / L1) + c2 cos(2 pi x2 / L2) cos(2 pi x3 / L3).

    Sign-changing for the default coefficients, with positive wells near
    the x1 faces and a negative ridge at the slab center; even about
    every midplane.
    """
    c = np.zeros((3, 3, 3))
    c[0, 0, 0] = c0
    c[2, 0, 0] = c1
    c[0, 2, 2] = c2
    return ChargeProfile(domain, c, name="two_well")


BUILTIN_PROFILES = {
    "constant": constant_profile,
    "separable_cosine": separable_cosine_profile,
    "two_well": two_well_profile,
}


def profile_from_name(name: str, domain: BoxDomain, **params) -> ChargeProfile:
    try:
        maker = BUILTIN_PROFILES[name]
    except KeyError:
        raise InvalidParameter(
            f"unknown charge profile {name!r}; known: {sorted(BUILTIN_PROFILES)}") from None
    return maker(domain, **params)
