"""Complex WKB toolkit for 2x2 matrix difference equations Psi(z+h) = M(z) Psi(z)."""

from .errors import (
    BranchError,
    DegenerateInputError,
    EvaluationRangeError,
    PoleProximityError,
    QuadratureError,
    SearchError,
    WkbError,
)
from .geometry import (
    ActionSample,
    CanonicalInterval,
    CanonicityReport,
    VerticalCurve,
    action_theta,
    canonicity_check,
    find_canonical_vertical_lines,
)
from .matrices import (
    AssumptionReport,
    FourierMatrix,
    IndexData,
    PolynomialFunction,
    PolynomialMatrix,
    TrigPolynomial,
    companion_from_scalar,
    harper_companion,
    index_data,
    matrix_from_json,
    matrix_to_json,
    validate_assumptions,
)
from .momentum import (
    InfinityMomentumData,
    MomentumBranch,
    TurningPoint,
    default_branch,
    find_turning_points,
    infinity_momentum,
    momentum_at,
    momentum_derivative,
    momentum_second_derivative,
    principal_momentum,
)
from .oracle import (
    LatticeTrajectory,
    contour_integral,
    contour_integral_estimates,
    eigen_closed_form,
    projective_distance,
    propagate,
    scalar_recurrence,
)
from .phase import (
    EigenPair,
    OmegaLimitReport,
    PhaseIntegral,
    PhaseState,
    ResidueResult,
    advance_state,
    eigen_pair,
    eigen_pair_from_p,
    normalized_eigenvector,
    omega_density,
    omega_infinity_limit,
    omega_infinity_report,
    omega_sum_check,
    phase_integral,
    residue_at,
    start_state,
    walk_path,
)
from .wkb import (
    ScalingReport,
    WkbCandidate,
    default_h_grid,
    global_residual_profile,
    order_diagnostics,
    psi0,
    psi0_scaled,
    relative_residual,
    scaling_fit,
    t_matrix,
    w_matrix,
)

__version__ = "0.1.0"
