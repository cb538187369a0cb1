"""Per-axis trigonometric basis machinery.

Everything in the package is discretized in tensor products of 1-D
families on ``(0, L)``:

* sine family ``sin(k pi x / L)``, ``k = 1..K`` (vanishes at both ends,
  used for the Dirichlet/Navier class),
* cosine family ``cos(b pi x / L)``, ``b = 0..B`` (zero normal derivative
  at both ends, used for the Neumann class).

Both families are orthogonal over ``(0, L)`` and, crucially, discretely
orthogonal on the cell-centered grid ``x_j = (j + 1/2) L / M``:

    sum_j sin(a pi x_j / L) sin(b pi x_j / L) = (M/2) delta_ab,  1 <= a, b <= M-1
    sum_j cos(a pi x_j / L) cos(b pi x_j / L) = (M/2) delta_ab + (M/2) delta_a0 delta_b0

so pointwise products of band-limited fields can be projected *exactly*
onto either family by sampling on a sufficiently padded cell-centered
grid.  Parity bookkeeping: a product of factors is in the sine family
when an odd number of its factors are sine-family, else in the cosine
family.  The one genuinely non-local piece is the exact L2 projection of
cosine-family content onto the sine band, which has the closed form

    cos(b pi x / L) = sum_k c(k, b) sin(k pi x / L),
    c(k, b) = (4/pi) k / (k^2 - b^2)   for k - b odd, else 0.

Coefficient array conventions: sine arrays of length K hold modes
``1..K`` (index i is mode i+1); cosine arrays of length B+1 hold modes
``0..B``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

SINE = "sine"
COSINE = "cosine"

__all__ = [
    "SINE",
    "COSINE",
    "midpoint_nodes",
    "interior_nodes",
    "eval_matrix",
    "midpoint_projection_matrix",
    "interior_sine_matrix",
    "interior_sine_projection",
    "sine_from_cosine_matrix",
    "sine_cosine_pairing",
    "integral_vector",
    "poly_cos_integrals",
    "poly_sin_integrals",
    "apply_axis_matrices",
    "band_of",
    "product_family",
    "product_coefficients",
    "integral_of_product",
]


def midpoint_nodes(length: float, m: int) -> np.ndarray:
    """Cell-centered nodes (j + 1/2) L / m for j = 0..m-1."""
    return (np.arange(m) + 0.5) * (length / m)


def interior_nodes(length: float, m: int) -> np.ndarray:
    """Equispaced interior nodes j L / m for j = 1..m-1."""
    return np.arange(1, m) * (length / m)


@lru_cache(maxsize=256)
def _eval_matrix_cached(length: float, nodes_key: tuple, family: str, band: int) -> np.ndarray:
    nodes = np.asarray(nodes_key)
    if family == SINE:
        modes = np.arange(1, band + 1)
    else:
        modes = np.arange(0, band + 1)
    return np.cos(np.outer(nodes, modes) * (np.pi / length)) if family == COSINE \
        else np.sin(np.outer(nodes, modes) * (np.pi / length))


def eval_matrix(length: float, nodes: np.ndarray, family: str, band: int) -> np.ndarray:
    """Dense evaluation matrix E[j, i] = basis_i(nodes[j])."""
    return _eval_matrix_cached(length, tuple(np.asarray(nodes, dtype=float)), family, band)


@lru_cache(maxsize=256)
def midpoint_projection_matrix(length: float, m: int, family: str, band: int) -> np.ndarray:
    """Exact projection of band-limited samples on the m-point midpoint grid.

    Rows are modes, columns are nodes.  Valid for band <= m - 1; relies on
    the discrete orthogonality relations quoted in the module docstring.
    """
    if band > m - 1:
        raise ValueError(f"band {band} too large for midpoint grid of size {m}")
    nodes = midpoint_nodes(length, m)
    e = eval_matrix(length, nodes, family, band)
    p = (2.0 / m) * e.T
    if family == COSINE:
        p[0, :] *= 0.5
    return p


@lru_cache(maxsize=64)
def interior_sine_matrix(length: float, n: int) -> np.ndarray:
    """Evaluation of sine modes 1..n-1 at the n-1 interior nodes."""
    return eval_matrix(length, interior_nodes(length, n), SINE, n - 1)


@lru_cache(maxsize=64)
def interior_sine_projection(length: float, n: int) -> np.ndarray:
    """Inverse of :func:`interior_sine_matrix` (discrete sine orthogonality)."""
    return (2.0 / n) * interior_sine_matrix(length, n).T


@lru_cache(maxsize=128)
def sine_from_cosine_matrix(k_band: int, b_band: int) -> np.ndarray:
    """Exact L2 projection of cosine modes 0..b_band onto sine modes 1..k_band.

    C[i, b] with row i holding sine mode k = i + 1.  Independent of the
    axis length (it cancels in the normalization).
    """
    k = np.arange(1, k_band + 1)[:, None].astype(float)
    b = np.arange(0, b_band + 1)[None, :].astype(float)
    odd = ((k - b) % 2).astype(bool)
    denom = k * k - b * b
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(odd, (4.0 / np.pi) * k / denom, 0.0)
    return c


@lru_cache(maxsize=128)
def sine_cosine_pairing(k_band: int, b_band: int, length: float) -> np.ndarray:
    """Matrix of integrals int_0^L sin(k pi x/L) cos(b pi x/L) dx."""
    k = np.arange(1, k_band + 1)[:, None].astype(float)
    b = np.arange(0, b_band + 1)[None, :].astype(float)
    odd = ((k - b) % 2).astype(bool)
    denom = k * k - b * b
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(odd, (2.0 * length / np.pi) * k / denom, 0.0)
    return c


def integral_vector(family: str, band: int, length: float) -> np.ndarray:
    """Integrals of the basis functions over (0, L)."""
    if family == COSINE:
        v = np.zeros(band + 1)
        v[0] = length
        return v
    k = np.arange(1, band + 1)
    v = np.where(k % 2 == 1, 2.0 * length / (np.pi * k), 0.0)
    return v


def poly_cos_integrals(max_deg: int, b_band: int) -> np.ndarray:
    """C[j, b] = int_0^1 t^j cos(b pi t) dt, exact via the by-parts recursion."""
    c = np.zeros((max_deg + 1, b_band + 1))
    s = np.zeros((max_deg + 1, b_band + 1))
    c[:, 0] = 1.0 / (np.arange(max_deg + 1) + 1.0)
    for b in range(1, b_band + 1):
        bp = b * np.pi
        sign = -1.0 if b % 2 else 1.0
        s[0, b] = (1.0 - sign) / bp
        c[0, b] = 0.0
        for j in range(1, max_deg + 1):
            c[j, b] = -(j / bp) * s[j - 1, b]
            s[j, b] = -sign / bp + (j / bp) * c[j - 1, b]
    return c


def poly_sin_integrals(max_deg: int, b_band: int) -> np.ndarray:
    """S[j, b] = int_0^1 t^j sin(b pi t) dt for b >= 1 (column 0 is zero)."""
    c = np.zeros((max_deg + 1, b_band + 1))
    s = np.zeros((max_deg + 1, b_band + 1))
    for b in range(1, b_band + 1):
        bp = b * np.pi
        sign = -1.0 if b % 2 else 1.0
        s[0, b] = (1.0 - sign) / bp
        for j in range(1, max_deg + 1):
            c[j, b] = -(j / bp) * s[j - 1, b]
            s[j, b] = -sign / bp + (j / bp) * c[j - 1, b]
    return s


def apply_axis_matrices(tensor: np.ndarray, mats) -> np.ndarray:
    """Apply one dense matrix along each axis of a 3-D coefficient tensor."""
    out = tensor
    for ax, m in enumerate(mats):
        out = np.moveaxis(np.tensordot(m, out, axes=(1, ax)), 0, ax)
    return out


def band_of(tensor: np.ndarray, family: str, axis: int) -> int:
    """Highest mode present along one axis of a coefficient tensor."""
    size = tensor.shape[axis]
    return size if family == SINE else size - 1


def product_family(families) -> str:
    """Parity of a pointwise product: sine iff an odd number of sine factors."""
    n_sine = sum(1 for f in families if f == SINE)
    return SINE if n_sine % 2 == 1 else COSINE


def _required_grid(total_band: int, keep_band: int) -> int:
    # alias-free retention of modes <= keep_band requires 2M - keep > total
    m = (total_band + keep_band) // 2 + 1
    return max(m, keep_band + 1, 4)


def product_coefficients(factors, lengths, keep_band: int):
    """Exact coefficients of a pointwise product of band-limited factors.

    Parameters
    ----------
    factors : sequence of (tensor, family) pairs
        Each tensor is a 3-D coefficient array in the given family (same
        family on all three axes).
    lengths : (L1, L2, L3)
    keep_band : int
        Highest mode retained per axis in the result.

    Returns
    -------
    (family, tensor)
        Family of the product and its coefficient tensor truncated to
        ``keep_band`` per axis.  Exact (up to roundoff) because the
        factors are evaluated on a midpoint grid padded past the total
        bandwidth of the product.
    """
    fams = [f for _, f in factors]
    out_family = product_family(fams)
    values = None
    ms = []
    for ax in range(3):
        total = sum(band_of(t, f, ax) for t, f in factors)
        ms.append(_required_grid(total, keep_band))
    for tensor, family in factors:
        mats = [
            eval_matrix(lengths[ax], midpoint_nodes(lengths[ax], ms[ax]), family,
                        band_of(tensor, family, ax))
            for ax in range(3)
        ]
        nodal = apply_axis_matrices(tensor, mats)
        values = nodal if values is None else values * nodal
    projs = [
        midpoint_projection_matrix(lengths[ax], ms[ax], out_family, keep_band)
        for ax in range(3)
    ]
    return out_family, apply_axis_matrices(values, projs)


def integral_of_product(factors, lengths) -> float:
    """Exact integral over the box of a pointwise product of band-limited factors."""
    total_bands = [sum(band_of(t, f, ax) for t, f in factors) for ax in range(3)]
    keep = max(total_bands)
    family, coeffs = product_coefficients(factors, lengths, keep)
    vecs = [integral_vector(family, keep, lengths[ax]) for ax in range(3)]
    out = np.tensordot(coeffs, vecs[2], axes=(2, 0))
    out = np.tensordot(out, vecs[1], axes=(1, 0))
    return float(np.tensordot(out, vecs[0], axes=(0, 0)))
