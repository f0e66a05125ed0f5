"""Projected primal-dual gradient flow for constrained concave programs.

The multiplier dynamics clamps at the boundary of the nonnegative
orthant, making the flow a projected dynamical system with a
discontinuous right-hand side.  This package integrates it with
boundary-exact fixed-step schemes, certifies convergence to KKT points by
Lyapunov monitoring, and reproduces the mode-switch sensitivity
experiment that distinguishes hybrid-mode continuity from plain
continuity in the initial condition.
"""

from pdflow.analysis import (
    KktReport,
    ModeTrace,
    OmegaLimitEstimate,
    WitnessPair,
    continuity_experiment,
    counterexample_witness,
    estimate_omega_limit,
    extract_mode_trace,
    kkt_residual,
    lie_derivative,
    lyapunov_value,
    lyapunov_value_gains,
)
from pdflow.dynamics import (
    GainMatrices,
    field_primal_dual,
    field_unprojected,
    field_with_gains,
    verify_projection_identity,
)
from pdflow.integrator import (
    IntegratorConfig,
    Trajectory,
    integrate,
    integrate_batch,
    read_trajectory_csv,
    step_projected_euler,
    step_projected_rk4,
    write_trajectory_csv,
)
from pdflow.kernels import BACKEND as KERNEL_BACKEND
from pdflow.problem_model import (
    ConcaveProgram,
    PrimalDualPoint,
    QuadraticProgramSpec,
    SaddlePoint,
    grad_lambda_lagrangian,
    grad_x_lagrangian,
    lagrangian,
    load_problem,
    load_quadratic,
    save_problem,
)
from pdflow.projection import (
    point_projection_orthant_product,
    positive_projection_scalar,
    positive_projection_vec,
    vector_projection,
)

__version__ = "0.1.0"

__all__ = [
    "ConcaveProgram",
    "GainMatrices",
    "IntegratorConfig",
    "KERNEL_BACKEND",
    "KktReport",
    "ModeTrace",
    "OmegaLimitEstimate",
    "PrimalDualPoint",
    "QuadraticProgramSpec",
    "SaddlePoint",
    "Trajectory",
    "WitnessPair",
    "continuity_experiment",
    "counterexample_witness",
    "estimate_omega_limit",
    "extract_mode_trace",
    "field_primal_dual",
    "field_unprojected",
    "field_with_gains",
    "grad_lambda_lagrangian",
    "grad_x_lagrangian",
    "integrate",
    "integrate_batch",
    "kkt_residual",
    "lagrangian",
    "lie_derivative",
    "load_problem",
    "load_quadratic",
    "lyapunov_value",
    "lyapunov_value_gains",
    "point_projection_orthant_product",
    "positive_projection_scalar",
    "positive_projection_vec",
    "read_trajectory_csv",
    "save_problem",
    "step_projected_euler",
    "step_projected_rk4",
    "vector_projection",
    "verify_projection_identity",
    "write_trajectory_csv",
]
