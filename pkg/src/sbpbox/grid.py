"""Box domains, tensor-product grids, and spectral scalar fields.

The domain is an open box (0, L1) x (0, L2) x (0, L3).  Two spectral
boundary classes are supported, both of which diagonalize -Laplace and
the bi-Laplacian:

* ``dirichlet-sine``: tensor products of ``sin(k pi x / L)`` sampled at
  the (n-1)^3 equispaced interior nodes.  Fields vanish on the boundary
  by construction.
* ``neumann-cosine``: tensor products of ``cos(b pi x / L)`` sampled at
  the n^3 cell-centered nodes.  Both the normal derivative and the
  normal derivative of the Laplacian vanish on every face.

A third class ``nodal`` carries plain point values (on either node set)
with no spectral interpretation; it is what pointwise products and
compactly supported constructions produce.

Mode k = (k1, k2, k3) has Laplacian eigenvalue
``lambda_k = pi^2 sum_i (k_i / L_i)^2``; the H_0^1 and biharmonic-energy
norms are weighted coefficient sums with weights lambda and
lambda + lambda^2 respectively.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import basis
from .exceptions import (
    DegenerateInput,
    GridMismatch,
    InvalidParameter,
    InvalidResolution,
    UnsupportedClass,
)

DIRICHLET_SINE = "dirichlet-sine"
NEUMANN_COSINE = "neumann-cosine"
NODAL = "nodal"

INTERIOR = "interior"
CENTERED = "centered"

_SPECTRAL_CLASSES = (DIRICHLET_SINE, NEUMANN_COSINE)

__all__ = [
    "DIRICHLET_SINE",
    "NEUMANN_COSINE",
    "NODAL",
    "INTERIOR",
    "CENTERED",
    "BoxDomain",
    "Grid",
    "make_grid",
    "ScalarField",
    "field_from_values",
    "field_from_coeffs",
    "zero_field",
    "to_spectral",
    "to_nodal",
    "inner_l2",
    "norm_l2",
    "norm_lp",
    "norm_h10",
    "norm_bih",
    "multiply_dealiased",
    "random_band_field",
]


@dataclass(frozen=True)
class BoxDomain:
    """Open box (0, L1) x (0, L2) x (0, L3)."""

    lengths: tuple[float, float, float]

    def __post_init__(self):
        if len(self.lengths) != 3 or any(L <= 0 for L in self.lengths):
            raise InvalidParameter(f"box lengths must be three positive reals, got {self.lengths}")
        object.__setattr__(self, "lengths", tuple(float(L) for L in self.lengths))

    @property
    def volume(self) -> float:
        L1, L2, L3 = self.lengths
        return L1 * L2 * L3


@dataclass(frozen=True)
class Grid:
    """Tensor-product node sets for both boundary classes at resolution n."""

    domain: BoxDomain
    n: int

    @property
    def lengths(self) -> tuple[float, float, float]:
        return self.domain.lengths

    @property
    def sine_shape(self) -> tuple[int, int, int]:
        return (self.n - 1,) * 3

    @property
    def cosine_shape(self) -> tuple[int, int, int]:
        return (self.n,) * 3

    def interior_nodes(self, axis: int) -> np.ndarray:
        return basis.interior_nodes(self.lengths[axis], self.n)

    def centered_nodes(self, axis: int) -> np.ndarray:
        return basis.midpoint_nodes(self.lengths[axis], self.n)

    def nodes(self, node_set: str, axis: int) -> np.ndarray:
        if node_set == INTERIOR:
            return self.interior_nodes(axis)
        if node_set == CENTERED:
            return self.centered_nodes(axis)
        raise UnsupportedClass(f"unknown node set {node_set!r}")

    @property
    def cell_volume(self) -> float:
        """Uniform quadrature weight h1 h2 h3 shared by both node sets."""
        return self.domain.volume / self.n**3


def make_grid(domain: BoxDomain, n: int) -> Grid:
    if int(n) != n or n < 4:
        raise InvalidResolution(f"resolution must be an integer >= 4, got {n}")
    return Grid(domain=domain, n=int(n))


@lru_cache(maxsize=64)
def _lambda_tensor(lengths: tuple, n: int, boundary_class: str) -> np.ndarray:
    axes = []
    for L in lengths:
        if boundary_class == DIRICHLET_SINE:
            k = np.arange(1, n)
        else:
            k = np.arange(0, n)
        axes.append((np.pi * k / L) ** 2)
    return axes[0][:, None, None] + axes[1][None, :, None] + axes[2][None, None, :]


@lru_cache(maxsize=64)
def _weight_tensor(lengths: tuple, n: int, boundary_class: str):
    """L2 weights of the basis functions: prod_i int_0^L basis^2."""
    if boundary_class == DIRICHLET_SINE:
        return float(np.prod([L / 2 for L in lengths]))
    ws = []
    for L in lengths:
        w = np.full(n, L / 2)
        w[0] = L
        ws.append(w)
    return ws[0][:, None, None] * ws[1][None, :, None] * ws[2][None, None, :]


def _default_node_set(boundary_class: str) -> str:
    return INTERIOR if boundary_class == DIRICHLET_SINE else CENTERED


class ScalarField:
    """A real scalar function on the box, tagged with a boundary class.

    Spectral classes keep both nodal values (on their own node set) and
    coefficients, materializing each lazily from the other.  Nodal
    fields carry values only.
    """

    __slots__ = ("grid", "boundary_class", "node_set", "_values", "_coeffs")

    def __init__(self, grid: Grid, boundary_class: str, values=None, coeffs=None,
                 node_set: str | None = None):
        if boundary_class not in (*_SPECTRAL_CLASSES, NODAL):
            raise UnsupportedClass(f"unknown boundary class {boundary_class!r}")
        if boundary_class == NODAL:
            if values is None:
                raise InvalidParameter("nodal fields require values")
            if node_set is None:
                raise InvalidParameter("nodal fields require an explicit node set")
        else:
            node_set = _default_node_set(boundary_class)
            if values is None and coeffs is None:
                raise InvalidParameter("need values or coefficients")
        self.grid = grid
        self.boundary_class = boundary_class
        self.node_set = node_set
        self._values = None if values is None else np.ascontiguousarray(values, dtype=float)
        self._coeffs = None if coeffs is None else np.ascontiguousarray(coeffs, dtype=float)
        for arr, kind in ((self._values, "values"), (self._coeffs, "coefficients")):
            if arr is not None:
                if arr.shape != self._expected_shape():
                    raise GridMismatch(
                        f"{kind} shape {arr.shape} does not match grid shape {self._expected_shape()}")
                if not np.all(np.isfinite(arr)):
                    raise InvalidParameter(f"non-finite {kind}")

    def _expected_shape(self):
        if self.boundary_class == DIRICHLET_SINE:
            return self.grid.sine_shape
        if self.boundary_class == NEUMANN_COSINE:
            return self.grid.cosine_shape
        return self.grid.sine_shape if self.node_set == INTERIOR else self.grid.cosine_shape

    @property
    def family(self) -> str:
        if self.boundary_class == DIRICHLET_SINE:
            return basis.SINE
        if self.boundary_class == NEUMANN_COSINE:
            return basis.COSINE
        raise UnsupportedClass("nodal fields have no spectral family")

    @property
    def coeffs(self) -> np.ndarray:
        if self.boundary_class == NODAL:
            raise UnsupportedClass("nodal fields have no spectral coefficients")
        if self._coeffs is None:
            mats = []
            for ax, L in enumerate(self.grid.lengths):
                if self.boundary_class == DIRICHLET_SINE:
                    mats.append(basis.interior_sine_projection(L, self.grid.n))
                else:
                    mats.append(basis.midpoint_projection_matrix(L, self.grid.n, basis.COSINE,
                                                               self.grid.n - 1))
            self._coeffs = basis.apply_axis_matrices(self._values, mats)
        return self._coeffs

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            nodes = [self.grid.nodes(self.node_set, ax) for ax in range(3)]
            self._values = self.eval_on(nodes)
        return self._values

    def eval_on(self, nodes_per_axis) -> np.ndarray:
        """Evaluate the band-limited interpolant on a tensor node set."""
        fam = self.family
        mats = []
        for ax, L in enumerate(self.grid.lengths):
            band = self.grid.n - 1
            mats.append(basis.eval_matrix(L, nodes_per_axis[ax], fam, band))
        return basis.apply_axis_matrices(self.coeffs, mats)

    @property
    def mean(self) -> float:
        if self.boundary_class == NEUMANN_COSINE:
            return float(self.coeffs[0, 0, 0])
        return float(self.values.sum() * self.grid.cell_volume / self.grid.domain.volume)

    @property
    def is_zero_mean(self) -> bool:
        return abs(self.mean) <= 1e-12

    # -- light arithmetic used throughout the solvers ------------------
    def _like(self, values=None, coeffs=None) -> "ScalarField":
        return ScalarField(self.grid, self.boundary_class, values=values, coeffs=coeffs,
                           node_set=self.node_set if self.boundary_class == NODAL else None)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        _check_combinable(self, other)
        if self.boundary_class == NODAL:
            return self._like(values=self.values + other.values)
        return self._like(coeffs=self.coeffs + other.coeffs)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return self + (other * -1.0)

    def __mul__(self, scalar: float) -> "ScalarField":
        if self.boundary_class == NODAL:
            return self._like(values=self.values * scalar)
        return self._like(coeffs=self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "ScalarField":
        return self * -1.0


def _check_combinable(f: ScalarField, g: ScalarField):
    if f.grid != g.grid:
        raise GridMismatch("fields live on different grids")
    if f.boundary_class != g.boundary_class or f.node_set != g.node_set:
        raise UnsupportedClass(
            f"cannot combine classes {f.boundary_class}/{f.node_set} and {g.boundary_class}/{g.node_set}")


def field_from_values(grid: Grid, boundary_class: str, values, node_set: str | None = None) -> ScalarField:
    return ScalarField(grid, boundary_class, values=values, node_set=node_set)


def field_from_coeffs(grid: Grid, boundary_class: str, coeffs) -> ScalarField:
    return ScalarField(grid, boundary_class, coeffs=coeffs)


def zero_field(grid: Grid, boundary_class: str = DIRICHLET_SINE, node_set: str | None = None) -> ScalarField:
    if boundary_class == NODAL:
        shape = grid.sine_shape if node_set == INTERIOR else grid.cosine_shape
        return ScalarField(grid, NODAL, values=np.zeros(shape), node_set=node_set)
    shape = grid.sine_shape if boundary_class == DIRICHLET_SINE else grid.cosine_shape
    return ScalarField(grid, boundary_class, coeffs=np.zeros(shape))


def to_spectral(f: ScalarField) -> np.ndarray:
    """Spectral coefficients of a field in one of the two spectral classes."""
    return f.coeffs.copy()


def to_nodal(coeffs: np.ndarray, boundary_class: str, grid: Grid) -> ScalarField:
    if boundary_class not in _SPECTRAL_CLASSES:
        raise UnsupportedClass(f"to_nodal needs a spectral class, got {boundary_class!r}")
    return ScalarField(grid, boundary_class, coeffs=np.asarray(coeffs, dtype=float))


def inner_l2(f: ScalarField, g: ScalarField) -> float:
    """Exact L2 inner product for spectral operands; quadrature with nodal ones."""
    if f.grid != g.grid:
        raise GridMismatch("fields live on different grids")
    spectral_f = f.boundary_class in _SPECTRAL_CLASSES
    spectral_g = g.boundary_class in _SPECTRAL_CLASSES
    if spectral_f and spectral_g:
        if f.boundary_class == g.boundary_class:
            w = _weight_tensor(f.grid.lengths, f.grid.n, f.boundary_class)
            return float(np.sum(f.coeffs * g.coeffs * w))
        sine, cosn = (f, g) if f.boundary_class == DIRICHLET_SINE else (g, f)
        mats = [basis.sine_cosine_pairing(sine.grid.n - 1, cosn.grid.n - 1, L)
                for L in f.grid.lengths]
        paired = basis.apply_axis_matrices(cosn.coeffs, mats)
        return float(np.sum(sine.coeffs * paired))
    # at least one nodal operand: quadrature on its node set
    anchor = f if not spectral_f else g
    nodes = [anchor.grid.nodes(anchor.node_set, ax) for ax in range(3)]
    fv = f.values if not spectral_f else f.eval_on(nodes)
    gv = g.values if not spectral_g else g.eval_on(nodes)
    if not spectral_f and not spectral_g and f.node_set != g.node_set:
        raise GridMismatch("nodal fields on different node sets")
    return float(np.sum(fv * gv) * f.grid.cell_volume)


def norm_l2(f: ScalarField) -> float:
    return float(np.sqrt(max(inner_l2(f, f), 0.0)))


def norm_lp(f: ScalarField, p: float) -> float:
    """L^p norm by nodal quadrature on the field's own node set."""
    if p <= 0:
        raise InvalidParameter(f"p must be positive, got {p}")
    v = np.abs(f.values)
    return float((np.sum(v**p) * f.grid.cell_volume) ** (1.0 / p))


def _spectral_energy(f: ScalarField, power_weight) -> float:
    if f.boundary_class not in _SPECTRAL_CLASSES:
        raise UnsupportedClass("spectral norms need a spectral class")
    lam = _lambda_tensor(f.grid.lengths, f.grid.n, f.boundary_class)
    w = _weight_tensor(f.grid.lengths, f.grid.n, f.boundary_class)
    return float(np.sum(power_weight(lam) * f.coeffs**2 * w))


def norm_h10(u: ScalarField) -> float:
    """Gradient seminorm (integral of |grad u|^2)^(1/2), computed spectrally."""
    return float(np.sqrt(max(_spectral_energy(u, lambda lam: lam), 0.0)))


def norm_bih(phi: ScalarField) -> float:
    """Energy norm of the fourth-order operator: (int |D phi|^2 + |grad phi|^2)^(1/2)."""
    return float(np.sqrt(max(_spectral_energy(phi, lambda lam: lam + lam**2), 0.0)))


def multiply_dealiased(f: ScalarField, g: ScalarField) -> ScalarField:
    """Pointwise product of two fields as a nodal field.

    Operands in the same class multiply on their shared node set; mixed
    spectral classes are both evaluated on the cell-centered nodes.  The
    values are exact point values of the product of the band-limited
    interpolants (equivalently: the product formed on a padded grid and
    sampled back), so the result is alias-free wherever the product
    spectrum is representable.
    """
    if f.grid != g.grid:
        raise GridMismatch("fields live on different grids")
    f_nodal = f.boundary_class == NODAL
    g_nodal = g.boundary_class == NODAL
    if f_nodal or g_nodal:
        anchor = f if f_nodal else g
        if f_nodal and g_nodal and f.node_set != g.node_set:
            raise GridMismatch("nodal fields on different node sets")
        nodes = [anchor.grid.nodes(anchor.node_set, ax) for ax in range(3)]
        fv = f.values if f_nodal else f.eval_on(nodes)
        gv = g.values if g_nodal else g.eval_on(nodes)
        return ScalarField(f.grid, NODAL, values=fv * gv, node_set=anchor.node_set)
    if f.boundary_class == g.boundary_class:
        return ScalarField(f.grid, NODAL, values=f.values * g.values,
                           node_set=_default_node_set(f.boundary_class))
    nodes = [f.grid.centered_nodes(ax) for ax in range(3)]
    return ScalarField(f.grid, NODAL, values=f.eval_on(nodes) * g.eval_on(nodes),
                       node_set=CENTERED)


def random_band_field(grid: Grid, boundary_class: str, rng: np.random.Generator,
                      band_fraction: float = 0.5, decay: float = 2.0) -> ScalarField:
    """Random smooth field: Gaussian coefficients cut at a fraction of the band.

    The hard cutoff keeps quadratic and cubic products of such fields
    exactly representable on the padded product grids, which is what the
    identity checks in the test-suite rely on.
    """
    if boundary_class == DIRICHLET_SINE:
        modes = [np.arange(1, grid.n)] * 3
        shape = grid.sine_shape
    elif boundary_class == NEUMANN_COSINE:
        modes = [np.arange(0, grid.n)] * 3
        shape = grid.cosine_shape
    else:
        raise UnsupportedClass("random fields are spectral")
    cut = max(2, int(np.floor(band_fraction * (grid.n - 1))))
    coeffs = rng.standard_normal(shape)
    for ax in range(3):
        k = modes[ax]
        win = np.where(k <= cut, np.exp(-decay * (k / max(cut, 1)) ** 2), 0.0)
        coeffs *= win.reshape([-1 if a == ax else 1 for a in range(3)])
    return ScalarField(grid, boundary_class, coeffs=coeffs)
