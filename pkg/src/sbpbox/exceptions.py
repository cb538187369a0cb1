"""Exception taxonomy for the solver stack.

Every failure mode that callers are expected to branch on gets its own
class.  All of them derive from :class:`SbpError` so scripts can catch
the whole family at once.  Non-convergence is deliberately *not* an
exception: solvers return a partial solution with ``converged=False``.
"""

__all__ = [
    "SbpError",
    "InvalidResolution",
    "UnsupportedClass",
    "GridMismatch",
    "SingularPoint",
    "InvalidParameter",
    "QuadratureFailure",
    "CompatibilityViolation",
    "DegenerateInput",
    "OffManifold",
    "DegenerateConstraints",
    "RetractionFailure",
    "PackingFailure",
    "LocalizationFailure",
    "CertificateFailure",
    "SymmetryViolation",
    "InvalidExponent",
    "ConfigError",
]


class SbpError(Exception):
    """Base class for all package errors."""


class InvalidResolution(SbpError):
    """Grid resolution outside the supported range."""


class UnsupportedClass(SbpError):
    """Operation applied to a field whose boundary class does not support it."""


class GridMismatch(SbpError):
    """Two fields that must share a grid do not."""


class SingularPoint(SbpError):
    """Kernel evaluated at a point where it diverges."""


class InvalidParameter(SbpError):
    """Scalar parameter outside its admissible range."""


class QuadratureFailure(SbpError):
    """Adaptive quadrature failed to converge."""


class CompatibilityViolation(SbpError):
    """Data violate a solvability (compatibility) condition."""


class DegenerateInput(SbpError):
    """Input field is degenerate (for instance identically zero)."""


class OffManifold(SbpError):
    """Point does not satisfy the constraint(s) to tolerance."""


class DegenerateConstraints(SbpError):
    """Constraint gradients are numerically linearly dependent."""


class RetractionFailure(SbpError):
    """Newton retraction onto the constraint set did not converge."""


class PackingFailure(SbpError):
    """Could not place the requested number of disjoint balls."""


class LocalizationFailure(SbpError):
    """Localized bump does not separate the constraint values as required."""


class CertificateFailure(SbpError):
    """Genus certificate could not be established."""


class SymmetryViolation(SbpError):
    """Data lack the symmetry required by the requested invariant subspace."""


class InvalidExponent(SbpError):
    """Exponent outside the admissible window."""


class ConfigError(SbpError):
    """Malformed or inconsistent run configuration."""
