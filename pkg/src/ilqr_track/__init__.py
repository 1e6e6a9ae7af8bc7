"""iLQR and time-varying LQR tracking for a differential-drive robot."""

from .cost import CostWeights, Reference, cost_to_go, final_cost, running_cost, total_cost
from .dynamics import ControlInput, DiffDriveModel, LinearModel, RobotState, Trajectory, rollout
from .ilqr import GainSchedule, Solution, SolverOptions, backward_pass, forward_pass, solve
from .lqr import linearize_along, track, tv_lqr_gains
from .path import BellPathParams, ReferencePath, generate_bell, tracking_metrics, wrap_angle

__all__ = [
    "BellPathParams",
    "ControlInput",
    "CostWeights",
    "DiffDriveModel",
    "GainSchedule",
    "LinearModel",
    "Reference",
    "ReferencePath",
    "RobotState",
    "Solution",
    "SolverOptions",
    "Trajectory",
    "backward_pass",
    "cost_to_go",
    "final_cost",
    "forward_pass",
    "generate_bell",
    "linearize_along",
    "rollout",
    "running_cost",
    "solve",
    "total_cost",
    "track",
    "tracking_metrics",
    "tv_lqr_gains",
    "wrap_angle",
]
