"""Deterministic token-ring simulation of the distributed solver.

N agents sit on a cyclic digraph; each owns one projectable set and a
private Dykstra increment.  A single (guess, flag) message circulates
1 -> 2 -> ... -> N -> 1.  Agent 1 doubles as coordinator: when its own
projection stops moving it drops the guess onto the hyperplane t = t_min
(the Bregman step) and raises the increment-reset flag for one full cycle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .alternating import MinMaxSolution
from .errors import ConvergenceError
from .geometry import PointTime, ProjectableSet

Array = np.ndarray


@dataclass
class AgentNode:
    """Per-agent protocol state: own set, private increment, last guess."""

    id: int
    own_set: ProjectableSet
    increment: Optional[Array] = None
    last_guess: Optional[PointTime] = None  # used by agent 1 only

    def __post_init__(self):
        if self.id < 1:
            raise ValueError("agent ids start at 1")
        if self.increment is None:
            self.increment = np.zeros(self.own_set.dim + 1)


@dataclass(frozen=True)
class RingMessage:
    """The circulating message: guess, reset flag, and accumulated drift.

    drift sums each visited agent's increment change since the coordinator
    last saw the message; the guess alone can stall for whole cycles while
    increments still move, so the coordinator needs both before it may
    declare the inner projection converged.
    """

    guess: PointTime
    flag: int
    drift: float = 0.0

    def __post_init__(self):
        if self.flag not in (0, 1):
            raise ValueError("flag must be 0 or 1")
        if self.drift < 0:
            raise ValueError("drift must be nonnegative")


@dataclass(frozen=True)
class RingConfig:
    err: float = 1e-7
    t_min: float = 0.0
    max_cycles: int = 100000
    record_trace: bool = True
    outer_tol: float = 1e-6

    def __post_init__(self):
        if self.err <= 0 or self.outer_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_cycles < 1:
            raise ValueError("max_cycles must be at least 1")


@dataclass(frozen=True)
class ProtocolEvent:
    """Outcome of one coordinator turn."""

    bregman: bool
    error_norm: float
    pre_plane: Optional[PointTime] = None  # guess before the plane drop


@dataclass(frozen=True)
class RingTraceRow:
    cycle: int
    agent_id: int
    guess: Array
    increment_norm: float
    flag: int
    bregman_event: bool


def agent_step(node: AgentNode, msg: RingMessage) -> Tuple[AgentNode, RingMessage]:
    """One Dykstra update at a single agent.

    Projects the incoming guess minus the private increment onto the
    agent's own set and updates the increment.  flag = 1 (the cycle after
    a Bregman event) discards the stale increment first, so the reset
    cycle doubles as the first genuine cycle of the restarted inner run;
    zeroing after the projection instead would unanchor the restart from
    the plane point and stall the outer loop on non-optimal fixed points.
    """
    old = node.increment
    if msg.flag == 1:
        node.increment = np.zeros_like(node.increment)
    y = msg.guess.to_array() - node.increment
    q = node.own_set.project(PointTime.from_array(y))
    node.increment = q.to_array() - y
    change = float(np.linalg.norm(node.increment - old))
    return node, RingMessage(q, msg.flag, msg.drift + change)


def coordinator_step(
    node1: AgentNode, msg_from_n: RingMessage, cfg: RingConfig
) -> Tuple[AgentNode, RingMessage, ProtocolEvent]:
    """Agent 1's turn: own Dykstra step, then possibly the Bregman step.

    Compares the spatial part of the fresh projection with the stored
    previous guess; when the change drops below cfg.err the guess is
    projected onto the plane t = t_min and the reset flag is raised.
    """
    if node1.id != 1:
        raise ValueError("coordinator_step requires the agent with id 1")
    node1, m = agent_step(node1, msg_from_n)
    g = m.guess
    if node1.last_guess is None:
        e = np.inf
    else:
        # m.drift carries every agent's increment movement over the last
        # full circulation, closing the guess-stall blind spot
        e = float(np.linalg.norm(g.x - node1.last_guess.x)) + m.drift
    node1.last_guess = g
    if e < cfg.err:
        # forget the pre-drop guess: the restarted inner run must stabilize
        # on its own evidence, not by matching the run it replaced
        node1.last_guess = None
        out = RingMessage(PointTime(g.x, cfg.t_min), 1)
        return node1, out, ProtocolEvent(True, e, pre_plane=g)
    return node1, RingMessage(g, 0), ProtocolEvent(False, e)


def run_ring(
    agents: Sequence[AgentNode], p0: PointTime, cfg: RingConfig
) -> MinMaxSolution:
    """Simulate the token ring until two consecutive Bregman events move
    the plane-side point less than cfg.outer_tol."""
    if not agents:
        raise ValueError("at least one agent is required")
    ids = [a.id for a in agents]
    if ids != list(range(1, len(agents) + 1)):
        raise ValueError("agents must be ordered by id 1..N")
    msg = RingMessage(p0, 0)
    trace: List[RingTraceRow] = []
    counts = {a.id: 0 for a in agents}
    prev_plane: Optional[PointTime] = None
    last_event: Optional[ProtocolEvent] = None
    n_events = 0
    last_guess = p0

    for cycle in range(1, cfg.max_cycles + 1):
        node1, msg, event = coordinator_step(agents[0], msg, cfg)
        counts[1] += 1
        if cfg.record_trace:
            trace.append(
                RingTraceRow(
                    cycle,
                    1,
                    msg.guess.to_array(),
                    float(np.linalg.norm(node1.increment)),
                    msg.flag,
                    event.bregman,
                )
            )
        if event.bregman:
            n_events += 1
            last_event = event
            plane_pt = msg.guess
            if (
                prev_plane is not None
                and plane_pt.distance_to(prev_plane) < cfg.outer_tol
            ):
                a = event.pre_plane
                return MinMaxSolution(
                    x_star=a.x.copy(),
                    t_star=a.t,
                    distance=a.distance_to(plane_pt),
                    inner_cycles_total=cycle,
                    outer_iters=n_events,
                    trace=trace,
                    plane_grazed=(a.t - cfg.t_min) < cfg.outer_tol,
                    message_counts=dict(counts),
                )
            prev_plane = plane_pt
        last_guess = msg.guess
        for node in agents[1:]:
            node, msg = agent_step(node, msg)
            counts[node.id] += 1
            if cfg.record_trace:
                trace.append(
                    RingTraceRow(
                        cycle,
                        node.id,
                        msg.guess.to_array(),
                        float(np.linalg.norm(node.increment)),
                        msg.flag,
                        False,
                    )
                )

    best = last_event.pre_plane if last_event is not None else last_guess
    raise ConvergenceError(
        "ring protocol: cycle cap reached",
        iterate=best,
        residual=np.inf,
        iterations=cfg.max_cycles,
    )
