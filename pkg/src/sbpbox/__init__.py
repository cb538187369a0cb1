"""Spectral solver and verification suite for a coupled fourth-order
electrostatic Schrodinger system on 3-D box domains.

Layering, bottom up: ``basis`` (exact trigonometric algebra), ``grid``
(fields and norms), ``charge`` (coupling profiles), ``greens`` (radial
kernels), ``operators`` (fourth-order solves and flux lifts),
``reduction`` (the potential map and its identities), ``energy`` (the
reduced functional and multipliers), ``manifold`` (constraint sets),
``solver`` (minimization and verification), ``config``/``runio``/
``cli`` (runs on disk).
"""

from .charge import (
    BUILTIN_PROFILES,
    ChargeProfile,
    constant_profile,
    profile_from_name,
    separable_cosine_profile,
    two_well_profile,
)
from .config import RunConfig, emit_config, parse_config
from .energy import (
    Evaluation,
    Multipliers,
    ProblemSpec,
    charge_gradient_field,
    charge_moment,
    energy_F,
    energy_J,
    evaluate,
    grad_J,
    multiplier_navier,
    multipliers_neumann,
)
from .exceptions import (
    CertificateFailure,
    CompatibilityViolation,
    ConfigError,
    DegenerateConstraints,
    DegenerateInput,
    GridMismatch,
    InvalidExponent,
    InvalidParameter,
    InvalidResolution,
    LocalizationFailure,
    OffManifold,
    PackingFailure,
    QuadratureFailure,
    RetractionFailure,
    SbpError,
    SingularPoint,
    SymmetryViolation,
    UnsupportedClass,
)
from .greens import (
    bp_kernel,
    coulomb,
    factorization_residual,
    radial_energy,
    yukawa,
)
from .grid import (
    CENTERED,
    DIRICHLET_SINE,
    INTERIOR,
    NEUMANN_COSINE,
    NODAL,
    BoxDomain,
    Grid,
    ScalarField,
    field_from_coeffs,
    field_from_values,
    inner_l2,
    make_grid,
    multiply_dealiased,
    norm_bih,
    norm_h10,
    norm_l2,
    norm_lp,
    random_band_field,
    zero_field,
)
from .manifold import (
    ConstraintSpec,
    FeasibilityReport,
    feasible_point,
    genus_certificate,
    project_sphere,
    retract_M,
    tangent_project_B,
    tangent_project_M,
    validate_alpha,
)
from .operators import (
    BoundaryFlux,
    ChiField,
    apply_operator,
    solve_chi,
    solve_navier,
    solve_neumann_zero_mean,
)
from .reduction import (
    NAVIER,
    NEUMANN,
    e_functional,
    phi_bound_ratio,
    reduce,
    reduction_identity_residual,
)
from .solver import (
    GNReport,
    Solution,
    SolverOptions,
    TraceRow,
    VerificationReport,
    excited_states,
    gn_probe,
    minimize_navier,
    minimize_neumann,
    verify_solution,
)

__version__ = "0.1.0"
