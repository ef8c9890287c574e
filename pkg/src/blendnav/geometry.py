"""Planar poses, twists and frame helpers shared by every other module."""

from __future__ import annotations

import math
from dataclasses import dataclass


def normalize_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.fmod(theta + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


@dataclass(frozen=True)
class Pose2D:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def normalized(self) -> "Pose2D":
        return Pose2D(self.x, self.y, normalize_angle(self.theta))

    def position_distance(self, other: "Pose2D") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Twist2D:
    """Planar velocity command. Differential-drive commands keep vy == 0."""

    vx: float = 0.0
    vy: float = 0.0
    omega: float = 0.0

    @staticmethod
    def zero() -> "Twist2D":
        return Twist2D(0.0, 0.0, 0.0)


def distance_to_goal(pose: Pose2D, goal: Pose2D) -> float:
    """Euclidean distance in the plane, ignoring heading."""
    return math.hypot(goal.x - pose.x, goal.y - pose.y)


def bearing_to(pose: Pose2D, target: Pose2D) -> float:
    """Heading error from pose.theta to the direction of target, in (-pi, pi]."""
    return normalize_angle(math.atan2(target.y - pose.y, target.x - pose.x) - pose.theta)


def to_robot_frame(pose: Pose2D, px: float, py: float) -> tuple[float, float]:
    """Express world point (px, py) in the robot frame of `pose`."""
    dx = px - pose.x
    dy = py - pose.y
    c = math.cos(pose.theta)
    s = math.sin(pose.theta)
    return c * dx + s * dy, -s * dx + c * dy
