"""Adaptive pole placement for discrete-time SISO plants, with audit tooling.

The package simulates an indirect adaptive controller: a projection-type
estimator identifies an incremental model of the plant, a polynomial design
equation places the closed-loop poles at every step, and the resulting
trajectories are checked against the estimator's energy inequalities, the
exact one-step state recursion, the pole-placement identity, and linear-like
gain bounds.  See the README for the command-line entry points.
"""

from .controller import (
    ControllerSolution,
    SingularSylvesterError,
    TargetPolynomial,
    closed_loop_matrix,
    control_step,
    rank_one_correction,
    solve_diophantine,
    state_recursion_audit,
)
from .estimator import (
    EstimatorAudit,
    EstimatorState,
    estimator_audit,
    predict_error,
    project_box,
    update,
    update_classical,
    update_ideal,
)
from .exact import charpoly_fractions, exact_pole_check, solve_fraction_system
from .plant import (
    AuxParameters,
    BoxSet,
    PlantParameters,
    SystemState,
    aux_param_matrix,
    aux_predict,
    aux_transform,
    image_box,
    make_regressor,
    plant_step,
)
from .polynomial import (
    Polynomial,
    RootConvergenceError,
    coprimeness_margin,
    poly_mul,
    poly_roots,
    singularity_threshold,
    spectral_radius,
    sylvester_matrix,
    sylvester_rcond,
)
from .simulation import (
    BoundReport,
    ConstantsEstimate,
    CrudeBoundReport,
    PoleAuditReport,
    SignalSpec,
    SimConfig,
    Trajectory,
    TrajectoryFormatError,
    crude_bound_audit,
    estimate_constants,
    gain_bound_fit,
    monte_carlo_sweep,
    pole_placement_audit,
    run_audits,
    run_closed_loop,
    signal_value,
    tracking_audit,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Polynomial",
    "RootConvergenceError",
    "poly_mul",
    "poly_roots",
    "spectral_radius",
    "sylvester_matrix",
    "sylvester_rcond",
    "coprimeness_margin",
    "singularity_threshold",
    "BoxSet",
    "PlantParameters",
    "AuxParameters",
    "SystemState",
    "aux_param_matrix",
    "aux_predict",
    "aux_transform",
    "image_box",
    "make_regressor",
    "plant_step",
    "EstimatorState",
    "EstimatorAudit",
    "estimator_audit",
    "predict_error",
    "project_box",
    "update",
    "update_classical",
    "update_ideal",
    "TargetPolynomial",
    "ControllerSolution",
    "SingularSylvesterError",
    "solve_diophantine",
    "control_step",
    "closed_loop_matrix",
    "state_recursion_audit",
    "rank_one_correction",
    "charpoly_fractions",
    "exact_pole_check",
    "solve_fraction_system",
    "SignalSpec",
    "signal_value",
    "SimConfig",
    "Trajectory",
    "TrajectoryFormatError",
    "run_closed_loop",
    "ConstantsEstimate",
    "estimate_constants",
    "CrudeBoundReport",
    "crude_bound_audit",
    "PoleAuditReport",
    "pole_placement_audit",
    "BoundReport",
    "gain_bound_fit",
    "tracking_audit",
    "monte_carlo_sweep",
    "run_audits",
]
