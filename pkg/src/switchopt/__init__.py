"""Optimal control of switched nonlinear systems via relaxation and projection.

The solver embeds the discrete switching input into the simplex, descends
on the relaxed problem with an adjoint-driven conditional-gradient method,
and projects back to pure switching signals with a duty-cycle-preserving
pulse-frequency operator.
"""

from .adjoint import (
    CostateTrajectory,
    directional_derivative_J,
    integrate_costate,
    optimality_theta,
    theta_is_valid_certificates,
)
from .errors import (
    AdaptKError,
    ConfigError,
    CostKinkWarning,
    DimensionError,
    EnumerationBudgetError,
    GridMismatchError,
    IntegrationBlowupError,
    ProjectionResolutionError,
    SimplexError,
    SwitchoptError,
)
from .model import (
    SwitchedProblem,
    eval_cost_gradient,
    eval_q1,
    eval_q2,
    eval_relaxed_field,
    get_problem,
    paper_example,
    register_problem,
)
from .project import adapt_k, project_Rk, projection_error
from .sim import Trajectory, compare_P, cost_J, psi, simulate
from .signal import (
    Grid,
    PureSignal,
    RelaxedSignal,
    SignalDirection,
    convex_combine,
    initial_signal_paper,
    is_pure,
    l2_norm,
    resample,
    signal_from_csv,
    signal_sup_distance,
    signal_to_csv,
    vertex_signal,
)
from .solver import (
    IterationRecord,
    Q_function,
    SolveResult,
    SolveStatus,
    SolverConfig,
    gamma_hat_step,
    gamma_r,
    history_to_csv,
    oracle_enumerate,
    solve,
)
from .topology import TopologyKind, g_image, topo_distance

__version__ = "0.1.0"

__all__ = [
    "AdaptKError",
    "ConfigError",
    "CostKinkWarning",
    "CostateTrajectory",
    "DimensionError",
    "EnumerationBudgetError",
    "Grid",
    "GridMismatchError",
    "IntegrationBlowupError",
    "IterationRecord",
    "ProjectionResolutionError",
    "PureSignal",
    "Q_function",
    "RelaxedSignal",
    "SignalDirection",
    "SimplexError",
    "SolveResult",
    "SolveStatus",
    "SolverConfig",
    "SwitchedProblem",
    "SwitchoptError",
    "TopologyKind",
    "Trajectory",
    "adapt_k",
    "compare_P",
    "convex_combine",
    "cost_J",
    "directional_derivative_J",
    "eval_cost_gradient",
    "eval_q1",
    "eval_q2",
    "eval_relaxed_field",
    "g_image",
    "gamma_hat_step",
    "gamma_r",
    "get_problem",
    "history_to_csv",
    "initial_signal_paper",
    "integrate_costate",
    "is_pure",
    "l2_norm",
    "optimality_theta",
    "oracle_enumerate",
    "paper_example",
    "project_Rk",
    "projection_error",
    "psi",
    "register_problem",
    "resample",
    "signal_from_csv",
    "signal_sup_distance",
    "signal_to_csv",
    "simulate",
    "solve",
    "theta_is_valid_certificates",
    "topo_distance",
    "vertex_signal",
]
