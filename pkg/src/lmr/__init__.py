"""Low-rank matrix recovery by projected gradient descent on the
fixed-rank manifold, with the diagnostic toolkit for its trajectories."""

from .manifold import (
    FactoredPoint,
    GroundTruth,
    TangentVector,
    pgd_step,
    retract,
    tangent_cone_project,
    tangent_project,
    truncated_svd,
)
from .sampling import (
    RandomSpec,
    rng_from_seed,
    sample_grd,
    sample_rank1_gaussian,
    sample_stiefel,
    spawn_rngs,
)
from .losses import (
    LossSpec,
    MeasurementEnsemble,
    estimate_isometry_constants,
    euclid_grad,
    full_completion,
    loss_value,
    make_ensemble,
    population_pr_loss,
)
from .optimizer import MonotonicityReport, PgdConfig, TrajectoryRecord, \
    monotonicity_check, run_pgd
from .diagnostics import (
    SpuriousSet,
    StageLabel,
    angle_spectrum,
    assumption_constants,
    enumerate_spurious,
    h_rho,
    lojasiewicz_ratio,
    r_block_report,
    spurious_region_test,
    stage_classify,
)
from .ode import (
    OdeSystem,
    ScalarState,
    discrete_map,
    factored_flow_derivative,
    integrate,
    ode_rhs,
)
from .estimator import LowRankRecovery

__version__ = "0.1.0"

__all__ = [
    "FactoredPoint", "GroundTruth", "TangentVector", "pgd_step", "retract",
    "tangent_cone_project", "tangent_project", "truncated_svd",
    "RandomSpec", "rng_from_seed", "sample_grd", "sample_rank1_gaussian",
    "sample_stiefel", "spawn_rngs",
    "LossSpec", "MeasurementEnsemble", "estimate_isometry_constants",
    "euclid_grad", "full_completion", "loss_value", "make_ensemble",
    "population_pr_loss",
    "MonotonicityReport", "PgdConfig", "TrajectoryRecord",
    "monotonicity_check", "run_pgd",
    "SpuriousSet", "StageLabel", "angle_spectrum", "assumption_constants",
    "enumerate_spurious", "h_rho", "lojasiewicz_ratio", "r_block_report",
    "spurious_region_test", "stage_classify",
    "OdeSystem", "ScalarState", "discrete_map", "factored_flow_derivative",
    "integrate", "ode_rhs",
    "LowRankRecovery",
    "__version__",
]
