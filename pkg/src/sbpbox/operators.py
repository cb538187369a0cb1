"""Linear solves for the operator -Laplace + Laplace^2 on the box.

Both spectral classes diagonalize the operator with symbol
``lambda + lambda^2``, so the homogeneous solves are coefficient-wise
divisions.  The inhomogeneous-flux auxiliary problem

    -Laplace chi + Laplace^2 chi = alpha / |Omega|  in Omega,
    d_n chi = h1,  d_n (Laplace chi) = h2           on each face,
    mean(chi) = 0,

is handled by lifting: for each axis and each tangential cosine mode of
the face data, a degree-9 polynomial profile matches the first- and
third-derivative data at both ends and additionally equates its own
fifth and seventh end derivatives to the combinations that kill the
leading boundary terms of the induced source.  The lifted source then
has cosine coefficients decaying like b^-6, the zero-mean remainder
solve converges super-algebraically, and the constant alpha / |Omega|
is produced by the lift automatically (divergence identity), which is
exactly the solvability statement for the flux problem.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import basis
from .charge import ChargeProfile
from .exceptions import (
    CompatibilityViolation,
    GridMismatch,
    InvalidParameter,
    UnsupportedClass,
)
from .grid import (
    CENTERED,
    DIRICHLET_SINE,
    NEUMANN_COSINE,
    NODAL,
    BoxDomain,
    Grid,
    ScalarField,
    inner_l2,
    norm_l2,
)

__all__ = [
    "BoundaryFlux",
    "ChiField",
    "apply_operator",
    "solve_navier",
    "solve_neumann_zero_mean",
    "extend_L",
    "solve_chi",
]

_FACE_KEYS = ("x1_lo", "x1_hi", "x2_lo", "x2_hi", "x3_lo", "x3_hi")
_TANGENTIAL_BAND = 3


def _face_axis(key: str) -> int:
    return int(key[1]) - 1


def _normalize_face(data, key: str) -> np.ndarray:
    """Per-face datum: scalar or tangential cosine coefficients (band <= 3).

    A coefficient array c[b1, b2] multiplies
    cos(b1 pi t1 / T1) cos(b2 pi t2 / T2) in the two tangential
    coordinates of the face, ordered by increasing axis index.
    """
    arr = np.atleast_2d(np.asarray(data, dtype=float))
    if arr.shape == (1, 1) or arr.ndim == 2:
        if arr.ndim != 2 or arr.shape[0] > _TANGENTIAL_BAND + 1 or arr.shape[1] > _TANGENTIAL_BAND + 1:
            raise InvalidParameter(
                f"face {key}: tangential coefficient block must be at most "
                f"{_TANGENTIAL_BAND + 1}x{_TANGENTIAL_BAND + 1}, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidParameter(f"face {key}: non-finite flux data")
        out = np.zeros((_TANGENTIAL_BAND + 1, _TANGENTIAL_BAND + 1))
        out[: arr.shape[0], : arr.shape[1]] = arr
        return out
    raise InvalidParameter(f"face {key}: expected scalar or 2-D coefficient block")


@dataclass(frozen=True)
class BoundaryFlux:
    """Flux data (h1, h2) per face plus the induced balance constant.

    ``h1[key]`` and ``h2[key]`` hold tangential cosine coefficients for
    the six faces keyed x1_lo .. x3_hi.  ``alpha`` is always recomputed
    from the face data as the integral of h2 minus the integral of h1
    over the boundary; a stored value is only cross-checked.
    """

    domain: "BoxDomain"
    h1: dict
    h2: dict
    alpha: float = None  # type: ignore[assignment]

    def __post_init__(self):
        h1 = {k: _normalize_face(self.h1.get(k, 0.0), k) for k in _FACE_KEYS}
        h2 = {k: _normalize_face(self.h2.get(k, 0.0), k) for k in _FACE_KEYS}
        for src in (self.h1, self.h2):
            unknown = set(src) - set(_FACE_KEYS)
            if unknown:
                raise InvalidParameter(f"unknown face keys {sorted(unknown)}; valid: {_FACE_KEYS}")
        object.__setattr__(self, "h1", h1)
        object.__setattr__(self, "h2", h2)
        recomputed = self._recompute_alpha()
        if self.alpha is not None and abs(float(self.alpha) - recomputed) > 1e-10 * (1 + abs(recomputed)):
            raise CompatibilityViolation(
                f"declared alpha={self.alpha} differs from face-data value {recomputed}")
        object.__setattr__(self, "alpha", recomputed)

    def _recompute_alpha(self) -> float:
        # cosine modes integrate to zero over their face, so only the
        # (0,0) coefficient survives the face quadrature
        total = 0.0
        for key in _FACE_KEYS:
            ax = _face_axis(key)
            t1, t2 = [L for i, L in enumerate(self.domain.lengths) if i != ax]
            area = t1 * t2
            total += area * (self.h2[key][0, 0] - self.h1[key][0, 0])
        return float(total)

    def face_area(self, key: str) -> float:
        ax = _face_axis(key)
        t1, t2 = [L for i, L in enumerate(self.domain.lengths) if i != ax]
        return t1 * t2

    @property
    def is_zero(self) -> bool:
        return all(np.all(self.h1[k] == 0) and np.all(self.h2[k] == 0) for k in _FACE_KEYS)


def _symbol(grid: Grid, boundary_class: str) -> np.ndarray:
    axes = []
    for L in grid.lengths:
        if boundary_class == DIRICHLET_SINE:
            k = np.arange(1, grid.n)
        else:
            k = np.arange(0, grid.n)
        axes.append((np.pi * k / L) ** 2)
    lam = axes[0][:, None, None] + axes[1][None, :, None] + axes[2][None, None, :]
    return lam + lam**2


def apply_operator(phi: ScalarField) -> ScalarField:
    """Apply -Laplace + Laplace^2 spectrally."""
    if phi.boundary_class == NODAL:
        raise UnsupportedClass("apply_operator needs a spectral class")
    sym = _symbol(phi.grid, phi.boundary_class)
    return ScalarField(phi.grid, phi.boundary_class, coeffs=sym * phi.coeffs)


def solve_navier(rhs: ScalarField) -> ScalarField:
    """phi with -Laplace phi + Laplace^2 phi = rhs, phi = Laplace phi = 0 on faces.

    Diagonal in the sine class; the symbol lambda + lambda^2 is strictly
    positive there, so the solve always succeeds and the weak form holds
    against every discrete test function exactly.
    """
    if rhs.boundary_class != DIRICHLET_SINE:
        raise UnsupportedClass("solve_navier needs a dirichlet-sine right-hand side")
    sym = _symbol(rhs.grid, DIRICHLET_SINE)
    return ScalarField(rhs.grid, DIRICHLET_SINE, coeffs=rhs.coeffs / sym)


def solve_neumann_zero_mean(rhs: ScalarField) -> ScalarField:
    """Zero-mean solve with natural (zero-flux) conditions.

    Requires a compatible (mean-free) right-hand side: the constant mode
    lies in the kernel, so a nonzero mean makes the problem unsolvable.
    """
    if rhs.boundary_class != NEUMANN_COSINE:
        raise UnsupportedClass("solve_neumann_zero_mean needs a neumann-cosine right-hand side")
    c = rhs.coeffs
    scale = norm_l2(rhs)
    if abs(c[0, 0, 0]) > 1e-8 * max(scale, 1e-300):
        raise CompatibilityViolation(
            f"right-hand side has mean {c[0, 0, 0]:.3e}; the zero-flux problem needs a mean-free source")
    sym = _symbol(rhs.grid, NEUMANN_COSINE)
    out = np.zeros_like(c)
    out.flat[1:] = c.flat[1:] / sym.flat[1:]
    out[0, 0, 0] = 0.0
    return ScalarField(rhs.grid, NEUMANN_COSINE, coeffs=out)


def extend_L(w: ScalarField, q: ChargeProfile) -> ScalarField:
    """Zero-mean response to the source q w - mean(q w).

    The mean subtraction makes the zero-flux problem solvable for every
    density w; linear in w.  Spectral inputs use exact dealiased
    projection of q w; nodal cell-centered inputs are projected from
    their samples (exact whenever q w is representable in band).
    """
    grid = w.grid
    if w.boundary_class == NODAL:
        if w.node_set != CENTERED:
            raise UnsupportedClass("nodal densities must live on the cell-centered nodes")
        qv = q.nodal(grid).values
        rhs = ScalarField(grid, NEUMANN_COSINE, values=qv * w.values)
        c = rhs.coeffs.copy()
    else:
        fam = basis.SINE if w.boundary_class == DIRICHLET_SINE else basis.COSINE
        family, c = basis.product_coefficients(
            [(w.coeffs, fam), (q.coeffs, basis.COSINE)], grid.lengths, grid.n - 1)
        if family != basis.COSINE:
            # odd-parity product has no mean and no cosine content to keep
            raise UnsupportedClass("q w is odd-parity; extend_L expects an even-parity density")
        c = c.copy()
    c[0, 0, 0] = 0.0
    return solve_neumann_zero_mean(ScalarField(grid, NEUMANN_COSINE, coeffs=c))


# -- flux lifting ------------------------------------------------------

def _solve_rational(rows, rhs):
    """Gaussian elimination over exact rationals for small dense systems.

    The two-point derivative conditions produce a Vandermonde-like
    matrix with condition number around 1e8; exact elimination keeps the
    boundary data satisfied to the last bit, which the manufactured
    recovery tolerances rely on.
    """
    m = len(rows)
    A = [[Fraction(v) for v in row] + [Fraction(b)] for row, b in zip(rows, rhs)]
    for col in range(m):
        piv = next(r for r in range(col, m) if A[r][col] != 0)
        A[col], A[piv] = A[piv], A[col]
        inv = 1 / A[col][col]
        A[col] = [v * inv for v in A[col]]
        for r in range(m):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [vr - f * vc for vr, vc in zip(A[r], A[col])]
    return [float(A[r][m]) for r in range(m)]


@lru_cache(maxsize=512)
def _lift_profile(length: float, mu: float, d1_lo: float, d1_hi: float,
                  d3_lo: float, d3_hi: float) -> tuple:
    """Degree-9 profile w(x) on [0, L] in the scaled monomials (x/L)^j.

    Matches w'(0), w'(L), w''', and pins w(0)=w(L)=0; the fifth and
    seventh derivatives at each end are set so that the induced source
    t = w'''' - (1+2 mu) w'' + (mu + mu^2) w has t' = t''' = 0 at both
    ends, which pushes its cosine tail to O(b^-6).
    """
    L = Fraction(float(length))

    def deriv_row(order: int, end: int):
        row = [Fraction(0)] * 10
        for j in range(order, 10):
            fall = 1
            for m in range(order):
                fall *= j - m
            row[j] = Fraction(fall) * Fraction(end) ** (j - order) / L**order
        return row

    d5_lo = (1 + 2 * mu) * d3_lo - (mu + mu**2) * d1_lo
    d5_hi = (1 + 2 * mu) * d3_hi - (mu + mu**2) * d1_hi
    d7_lo = (1 + 2 * mu) * d5_lo - (mu + mu**2) * d3_lo
    d7_hi = (1 + 2 * mu) * d5_hi - (mu + mu**2) * d3_hi
    targets = [
        (0, 0, 0.0), (0, 1, 0.0),
        (1, 0, d1_lo), (1, 1, d1_hi),
        (3, 0, d3_lo), (3, 1, d3_hi),
        (5, 0, d5_lo), (5, 1, d5_hi),
        (7, 0, d7_lo), (7, 1, d7_hi),
    ]
    rows = [deriv_row(order, end) for order, end, _ in targets]
    rhs = [val for _, _, val in targets]
    return tuple(_solve_rational(rows, rhs))


def _profile_derivative(coef: np.ndarray, length: float, order: int) -> np.ndarray:
    """Coefficients of the order-th derivative in the same scaled basis."""
    out = np.asarray(coef, dtype=float).copy()
    for _ in range(order):
        j = np.arange(len(out))
        out = (out * j / length)[1:] if len(out) > 1 else np.zeros(0)
    return out


def _eval_profile(coef: np.ndarray, length: float, x: np.ndarray) -> np.ndarray:
    t = np.asarray(x, dtype=float) / length
    return np.polynomial.polynomial.polyval(t, np.asarray(coef))


def _profile_cosine_coeffs(coef: np.ndarray, length: float, band: int) -> np.ndarray:
    """Exact cosine coefficients of a scaled-monomial profile on [0, L]."""
    C = basis.poly_cos_integrals(len(coef) - 1, band)
    raw = np.asarray(coef) @ C  # (1/L) int w cos  for each mode
    scale = np.full(band + 1, 2.0)
    scale[0] = 1.0
    return raw * scale


class _AxisLift:
    """All lift profiles for one axis: per tangential mode, a 1-D profile."""

    def __init__(self, axis: int, grid: Grid, flux: BoundaryFlux):
        self.axis = axis
        self.grid = grid
        L = grid.lengths[axis]
        tan_axes = [a for a in range(3) if a != axis]
        key_lo = f"x{axis + 1}_lo"
        key_hi = f"x{axis + 1}_hi"
        self.entries = []  # (b_t1, b_t2, profile coefficients)
        for b1 in range(_TANGENTIAL_BAND + 1):
            for b2 in range(_TANGENTIAL_BAND + 1):
                if (flux.h1[key_lo][b1, b2] == flux.h1[key_hi][b1, b2]
                        == flux.h2[key_lo][b1, b2] == flux.h2[key_hi][b1, b2] == 0.0):
                    continue
                mu = sum((np.pi * b / grid.lengths[t]) ** 2
                         for b, t in zip((b1, b2), tan_axes))
                d1_lo = -flux.h1[key_lo][b1, b2]
                d1_hi = flux.h1[key_hi][b1, b2]
                # the flux of the Laplacian of w(x) C(tangential) is
                # (w''' - mu w') C, so the tangential eigenvalue feeds
                # back into the third-derivative targets
                d3_lo = -flux.h2[key_lo][b1, b2] + mu * d1_lo
                d3_hi = flux.h2[key_hi][b1, b2] + mu * d1_hi
                coef = np.array(_lift_profile(L, mu, d1_lo, d1_hi, d3_lo, d3_hi))
                self.entries.append((b1, b2, mu, coef))

    def source_profile(self, mu: float, coef: np.ndarray) -> np.ndarray:
        """Coefficients of t = w'''' - (1+2mu) w'' + (mu+mu^2) w."""
        L = self.grid.lengths[self.axis]
        t = (mu + mu**2) * np.asarray(coef, dtype=float)
        d2 = _profile_derivative(coef, L, 2)
        d4 = _profile_derivative(coef, L, 4)
        t[: len(d2)] -= (1 + 2 * mu) * d2
        t[: len(d4)] += d4
        return t

    def cosine_tensor(self, band: int, use_source: bool) -> np.ndarray:
        """Exact cosine projection of the lift (or its induced source)."""
        shape = [band + 1] * 3
        out = np.zeros(shape)
        tan_axes = [a for a in range(3) if a != self.axis]
        L = self.grid.lengths[self.axis]
        for b1, b2, mu, coef in self.entries:
            prof = self.source_profile(mu, coef) if use_source else coef
            line = _profile_cosine_coeffs(prof, L, band)
            idx = [None, None, None]
            idx[self.axis] = slice(None)
            block = np.zeros(shape)
            sel = [b1 if a == tan_axes[0] else b2 if a == tan_axes[1] else slice(None)
                   for a in range(3)]
            block[tuple(sel)] = line
            out += block
        return out

    def eval_on(self, nodes_per_axis, use_source: bool = False) -> np.ndarray:
        tan_axes = [a for a in range(3) if a != self.axis]
        L = self.grid.lengths[self.axis]
        shape = [len(nodes_per_axis[a]) for a in range(3)]
        out = np.zeros(shape)
        for b1, b2, mu, coef in self.entries:
            prof = self.source_profile(mu, coef) if use_source else coef
            line = _eval_profile(prof, L, nodes_per_axis[self.axis])
            t1 = np.cos(b1 * np.pi * nodes_per_axis[tan_axes[0]] / self.grid.lengths[tan_axes[0]])
            t2 = np.cos(b2 * np.pi * nodes_per_axis[tan_axes[1]] / self.grid.lengths[tan_axes[1]])
            factors = [None, None, None]
            factors[self.axis] = line
            factors[tan_axes[0]] = t1
            factors[tan_axes[1]] = t2
            out += factors[0][:, None, None] * factors[1][None, :, None] * factors[2][None, None, :]
        return out


class ChiField(ScalarField):
    """Solution of the flux problem: band-limited part plus exact lift.

    Behaves as a neumann-cosine field (the band projection of the full
    solution, mean removed); ``eval_exact`` and ``residual_on`` expose
    the lift-aware representation used by the accuracy checks.
    """

    __slots__ = ("flux", "alpha", "lifts", "lift_mean", "remainder_coeffs", "extra_coeffs")

    def __init__(self, grid, coeffs, flux, lifts, lift_mean, remainder_coeffs, extra_coeffs):
        super().__init__(grid, NEUMANN_COSINE, coeffs=coeffs)
        self.flux = flux
        self.alpha = flux.alpha
        self.lifts = lifts
        self.lift_mean = lift_mean
        self.remainder_coeffs = remainder_coeffs
        self.extra_coeffs = extra_coeffs

    def eval_exact(self, nodes_per_axis) -> np.ndarray:
        out = np.full([len(nodes_per_axis[a]) for a in range(3)], -self.lift_mean)
        for lift in self.lifts:
            out += lift.eval_on(nodes_per_axis, use_source=False)
        mats = [basis.eval_matrix(self.grid.lengths[ax], nodes_per_axis[ax], basis.COSINE,
                                  self.grid.n - 1) for ax in range(3)]
        out += basis.apply_axis_matrices(self.remainder_coeffs, mats)
        return out

    def residual_on(self, nodes_per_axis) -> np.ndarray:
        """Pointwise strong residual of the flux equation, evaluated exactly.

        Equals minus the out-of-band tail of the projected lift source,
        so it shrinks like n^-5 under refinement.
        """
        shape = [len(nodes_per_axis[a]) for a in range(3)]
        out = np.full(shape, -self.alpha / self.grid.domain.volume)
        for lift in self.lifts:
            out += lift.eval_on(nodes_per_axis, use_source=True)
        sym = _symbol(self.grid, NEUMANN_COSINE)
        mats = [basis.eval_matrix(self.grid.lengths[ax], nodes_per_axis[ax], basis.COSINE,
                                  self.grid.n - 1) for ax in range(3)]
        out += basis.apply_axis_matrices(sym * self.remainder_coeffs, mats)
        if self.extra_coeffs is not None:
            emats = [basis.eval_matrix(self.grid.lengths[ax], nodes_per_axis[ax], basis.COSINE,
                                       self.extra_coeffs.shape[ax] - 1) for ax in range(3)]
            out -= basis.apply_axis_matrices(self.extra_coeffs, emats)
        return out

    def cosine_extension(self, band: int) -> np.ndarray:
        """Exact cosine coefficients of the full solution up to a wider band."""
        out = np.zeros([band + 1] * 3)
        for lift in self.lifts:
            out += lift.cosine_tensor(band, use_source=False)
        k = self.remainder_coeffs.shape[0]
        out[:k, :k, :k] += self.remainder_coeffs
        out[0, 0, 0] -= self.lift_mean
        return out


def solve_chi(flux: BoundaryFlux, grid: Grid, extra_source: ScalarField | None = None) -> ChiField:
    """Solve the inhomogeneous-flux problem by lift plus zero-mean remainder.

    ``extra_source`` (a mean-free cosine-class field) is added to the
    constant right-hand side alpha / |Omega|; it exists for manufactured
    solution checks.  The returned field is zero-mean; its band-limited
    coefficients converge to the true solution at the rate set by the
    b^-6 source tail of the lift.
    """
    if grid.domain.lengths != flux.domain.lengths:
        raise GridMismatch("flux data and grid live on different domains")
    extra_c = None
    if extra_source is not None:
        if extra_source.boundary_class != NEUMANN_COSINE:
            raise UnsupportedClass("extra_source must be a neumann-cosine field")
        if extra_source.grid != grid:
            raise GridMismatch("extra_source grid differs")
        extra_c = extra_source.coeffs.copy()
        if abs(extra_c[0, 0, 0]) > 1e-8 * max(norm_l2(extra_source), 1e-300):
            raise CompatibilityViolation("extra_source must be mean-free")
        extra_c[0, 0, 0] = 0.0

    lifts = [_AxisLift(ax, grid, flux) for ax in range(3)]
    band = grid.n - 1
    source = np.zeros(grid.cosine_shape)
    lift_proj = np.zeros(grid.cosine_shape)
    for lift in lifts:
        source += lift.cosine_tensor(band, use_source=True)
        lift_proj += lift.cosine_tensor(band, use_source=False)

    # divergence identity: the mean of the lifted source must reproduce
    # alpha / |Omega|; anything else signals inconsistent face data
    mean_gap = source[0, 0, 0] - flux.alpha / grid.domain.volume
    if abs(mean_gap) > 1e-9 * (1.0 + abs(flux.alpha)):
        raise CompatibilityViolation(
            f"flux data violates the balance identity by {mean_gap:.3e}")

    rhs = -source
    rhs[0, 0, 0] = 0.0
    if extra_c is not None:
        rhs += extra_c
    remainder = solve_neumann_zero_mean(ScalarField(grid, NEUMANN_COSINE, coeffs=rhs))

    lift_mean = float(lift_proj[0, 0, 0])
    coeffs = lift_proj + remainder.coeffs
    coeffs[0, 0, 0] -= lift_mean
    return ChiField(grid, coeffs, flux, lifts, lift_mean, remainder.coeffs, extra_c)
