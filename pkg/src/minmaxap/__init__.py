"""Distributed min-max convex optimization by alternating projections,
with a minimum-time multi-agent consensus application."""

from .alternating import (
    BregmanResult,
    DykstraState,
    MinMaxSolution,
    ToleranceConfig,
    bregman_alternate,
    dykstra_project,
    solve_minmax,
)
from .consensus import (
    AgentDynamics,
    ConsensusResult,
    ControlSchedule,
    Model,
    SecondOrderAttainableSet,
    bang_bang_control,
    first_order_attainable_set,
    first_order_reach_time,
    inverse_time_square,
    nonzero_velocity_transform,
    second_order_reach_time_general,
    second_order_reach_time_zero_vel,
    second_order_zero_vel_set,
    simulate_trajectory,
    solve_min_time_consensus,
    time_square_transform,
)
from .errors import (
    ConvergenceError,
    DimensionMismatchError,
    InfeasibleTargetError,
    OracleBudgetError,
    ProjectionError,
)
from .geometry import (
    Ball,
    ConvexEpigraph,
    Halfspace,
    HorizontalHyperplane,
    PointTime,
    ProjectableSet,
    SecondOrderCone,
    contains,
    project_cone,
    project_epigraph,
    project_hyperplane,
)
from .oracle import GridSpec, grid_minmax, numeric_projection
from .ring import (
    AgentNode,
    ProtocolEvent,
    RingConfig,
    RingMessage,
    agent_step,
    coordinator_step,
    run_ring,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
