"""The blended shared control law.

Each tick the controller mixes the operator command and the autonomous
command with a scalar weight computed from the distance to the goal and the
disagreement between the two commands:

    alpha   = max(0, 1 - d/d0) * max(0, 1 - (delta/delta0)^2)
    blended = alpha * user + (1 - alpha) * agent

alpha = 1 hands full authority to the operator, 0 to the agent, and the
transition is continuous - there is never a discrete control handoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import Pose2D, Twist2D, distance_to_goal


@dataclass
class BlendParams:
    d0: float = 15.0       # meters: distance at which the agent gets everything
    delta0: float = 3.0    # command-difference scale
    mode: str = "full_twist"   # or "angular_only"
    inverted: bool = False     # alpha -> 1 - alpha, sensitivity experiments only
    smoothing: float = 0.0     # exponential smoothing factor for UI feel, 0 = off

    def __post_init__(self):
        if self.d0 <= 0 or self.delta0 <= 0:
            raise ValueError("d0 and delta0 must be > 0")
        if self.mode not in ("full_twist", "angular_only"):
            raise ValueError(f"unknown command-difference mode {self.mode!r}")


@dataclass
class BlendState:
    alpha: float
    d: float
    delta: float
    user_cmd: Twist2D
    agent_cmd: Twist2D
    blended_cmd: Twist2D


def command_difference(user: Twist2D, agent: Twist2D,
                       mode: str = "full_twist") -> float:
    if mode == "angular_only":
        return abs(user.omega - agent.omega)
    return math.hypot(user.vx - agent.vx, user.omega - agent.omega)


def compute_alpha(d: float, delta: float, params: BlendParams) -> float:
    if d < 0 or delta < 0:
        raise ValueError("d and delta must be >= 0")
    alpha = max(0.0, 1.0 - d / params.d0) * \
        max(0.0, 1.0 - (delta / params.delta0) ** 2)
    if params.inverted:
        alpha = 1.0 - alpha
    return alpha


def blend(user: Twist2D, agent: Twist2D, alpha: float) -> Twist2D:
    """Componentwise convex combination over (vx, vy, omega)."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    beta = 1.0 - alpha
    return Twist2D(alpha * user.vx + beta * agent.vx,
                   alpha * user.vy + beta * agent.vy,
                   alpha * user.omega + beta * agent.omega)


def blend_step(user: Twist2D, agent: Twist2D, odom_pose: Pose2D, goal: Pose2D,
               params: BlendParams, prev_alpha: float | None = None) -> BlendState:
    """One full arbitration step; all intermediates are kept for logging."""
    d = distance_to_goal(odom_pose, goal)
    delta = command_difference(user, agent, params.mode)
    alpha = compute_alpha(d, delta, params)
    if params.smoothing > 0.0 and prev_alpha is not None:
        alpha = params.smoothing * prev_alpha + (1.0 - params.smoothing) * alpha
    return BlendState(alpha=alpha, d=d, delta=delta, user_cmd=user,
                      agent_cmd=agent, blended_cmd=blend(user, agent, alpha))
