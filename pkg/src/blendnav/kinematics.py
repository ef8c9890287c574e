"""Differential-drive integration: true pose and drift-corrupted odometry."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import Pose2D, Twist2D, normalize_angle

# below this |omega| the constant-twist arc degenerates to a straight line
OMEGA_EPS = 1e-6


@dataclass
class KinematicLimits:
    v_max: float = 1.0
    omega_max: float = 2.0
    a_lin: float = 1.0
    a_ang: float = 4.0

    def __post_init__(self):
        if min(self.v_max, self.omega_max, self.a_lin, self.a_ang) <= 0:
            raise ValueError("kinematic limits must be strictly positive")


@dataclass
class RobotState:
    true_pose: Pose2D
    odom_pose: Pose2D
    current_twist: Twist2D = field(default_factory=Twist2D.zero)
    time: float = 0.0


def integrate_unicycle(pose: Pose2D, twist: Twist2D, dt: float) -> Pose2D:
    """Exact constant-twist arc step (straight line when |omega| < OMEGA_EPS)."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    v, w = twist.vx, twist.omega
    if abs(w) < OMEGA_EPS:
        x = pose.x + v * dt * math.cos(pose.theta)
        y = pose.y + v * dt * math.sin(pose.theta)
        theta = pose.theta + w * dt
    else:
        theta = pose.theta + w * dt
        x = pose.x + (v / w) * (math.sin(theta) - math.sin(pose.theta))
        y = pose.y - (v / w) * (math.cos(theta) - math.cos(pose.theta))
    return Pose2D(x, y, normalize_angle(theta))


def update_odometry(odom_pose: Pose2D, twist: Twist2D, dt: float,
                    drift_rate: float) -> Pose2D:
    """Integrate the odometry estimate with an additive heading-rate bias.

    With drift_rate == 0 this is exactly integrate_unicycle, so the odometry
    frame stays aligned with the map frame.
    """
    biased = Twist2D(twist.vx, twist.vy, twist.omega + drift_rate)
    return integrate_unicycle(odom_pose, biased, dt)


def _clamp(value: float, lo: float, hi: float) -> float:
    return max(lo, min(hi, value))


def clamp_twist(twist: Twist2D, prev: Twist2D, limits: KinematicLimits,
                dt: float) -> Twist2D:
    """Bound a command by velocity limits and per-step acceleration limits."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    vx = _clamp(twist.vx, -limits.v_max, limits.v_max)
    omega = _clamp(twist.omega, -limits.omega_max, limits.omega_max)
    dv = limits.a_lin * dt
    dw = limits.a_ang * dt
    vx = _clamp(vx, prev.vx - dv, prev.vx + dv)
    omega = _clamp(omega, prev.omega - dw, prev.omega + dw)
    return Twist2D(vx, 0.0, omega)
