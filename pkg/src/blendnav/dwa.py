"""Dynamic-window-approach local planner: the autonomous side of the blend.

The planner knows only the local costmap and the odometry pose. It samples
velocities inside the acceleration-reachable window, forward-simulates
constant-twist arcs, and picks the best-scoring collision-free candidate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .geometry import Pose2D, Twist2D, normalize_angle
from .kinematics import OMEGA_EPS, KinematicLimits, RobotState, integrate_unicycle
from .world import OCCUPIED, OccupancyGrid


@dataclass
class ScoreWeights:
    heading: float = 0.6
    clearance: float = 0.25
    velocity: float = 0.15

    def __post_init__(self):
        if min(self.heading, self.clearance, self.velocity) < 0:
            raise ValueError("weights must be >= 0")
        if self.heading + self.clearance + self.velocity == 0:
            raise ValueError("at least one weight must be positive")


@dataclass
class DwaConfig:
    v_samples: int = 11
    omega_samples: int = 21
    horizon: float = 1.5
    sim_dt: float = 0.1
    window_dt: float = 0.25       # lookahead used to size the velocity window
    weights: ScoreWeights = field(default_factory=ScoreWeights)
    limits: KinematicLimits = field(default_factory=KinematicLimits)
    robot_radius: float = 0.2
    inflation_radius: float = 0.35

    def __post_init__(self):
        if self.v_samples < 3 or self.omega_samples < 3:
            raise ValueError("need at least 3 samples per axis")
        if not (self.horizon > self.sim_dt > 0):
            raise ValueError("need horizon > sim_dt > 0")

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.sim_dt))


def dynamic_window(current: Twist2D, limits: KinematicLimits,
                   dt: float) -> tuple[tuple[float, float], tuple[float, float]]:
    """Velocity box reachable within dt, intersected with the absolute bounds."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    v_lo = max(0.0, current.vx - limits.a_lin * dt)
    v_hi = min(limits.v_max, current.vx + limits.a_lin * dt)
    w_lo = max(-limits.omega_max, current.omega - limits.a_ang * dt)
    w_hi = min(limits.omega_max, current.omega + limits.a_ang * dt)
    return (v_lo, v_hi), (w_lo, w_hi)


def rollout(pose: Pose2D, v: float, omega: float, horizon: float,
            sim_dt: float) -> list[Pose2D]:
    """Forward-simulate a constant twist; returns horizon/sim_dt poses."""
    steps = int(round(horizon / sim_dt))
    twist = Twist2D(v, 0.0, omega)
    poses = []
    cur = pose
    for _ in range(steps):
        cur = integrate_unicycle(cur, twist, sim_dt)
        poses.append(cur)
    return poses


def _grid_clearance(costmap: OccupancyGrid, xs: np.ndarray,
                    ys: np.ndarray) -> np.ndarray:
    """Distance-field clearance sampled at the cells containing (xs, ys).

    Points outside the window are unexplored and treated as free (inf).
    """
    if costmap.dist_field is None:
        occ = costmap.occupancy == OCCUPIED
        if occ.any():
            costmap.dist_field = ndimage.distance_transform_edt(
                ~occ, sampling=costmap.resolution)
        else:
            costmap.dist_field = np.full(
                occ.shape, costmap.resolution * max(costmap.width, costmap.height))
    cols = np.floor((xs - costmap.origin.x) / costmap.resolution).astype(np.int64)
    rows = np.floor((ys - costmap.origin.y) / costmap.resolution).astype(np.int64)
    inb = (cols >= 0) & (cols < costmap.width) & (rows >= 0) & (rows < costmap.height)
    out = np.full(xs.shape, np.inf)
    out[inb] = costmap.dist_field[rows[inb], cols[inb]]
    return out


def score_trajectory(traj: list[Pose2D], goal_in_odom: Pose2D,
                     costmap: OccupancyGrid, config: DwaConfig,
                     v: float) -> float | None:
    """Score one candidate; None means infeasible (a pose comes too close).

    score = w_h * (1 - |heading error at endpoint| / pi)
          + w_c * min(1, min clearance / inflation radius)
          + w_v * (v / v_max)
    """
    if not traj:
        raise ValueError("trajectory must be nonempty")
    xs = np.array([p.x for p in traj])
    ys = np.array([p.y for p in traj])
    clear = _grid_clearance(costmap, xs, ys)
    min_clear = float(clear.min())
    if min_clear < config.robot_radius:
        return None
    end = traj[-1]
    err = abs(normalize_angle(math.atan2(goal_in_odom.y - end.y,
                                         goal_in_odom.x - end.x) - end.theta))
    w = config.weights
    return (w.heading * (1.0 - err / math.pi)
            + w.clearance * min(1.0, min_clear / config.inflation_radius)
            + w.velocity * (v / config.limits.v_max))


def plan_dwa(state: RobotState, goal_in_odom: Pose2D, costmap: OccupancyGrid,
             config: DwaConfig) -> tuple[Twist2D, list[Pose2D]]:
    """Exhaustive search over the sampled window; ties break at the lowest
    sample index (v first, then omega). All-infeasible inputs fall back to a
    rotate-in-place recovery command."""
    (v_lo, v_hi), (w_lo, w_hi) = dynamic_window(state.current_twist,
                                                config.limits, config.window_dt)
    vs = np.linspace(v_lo, v_hi, config.v_samples)
    ws = np.linspace(w_lo, w_hi, config.omega_samples)
    V, W = np.meshgrid(vs, ws, indexing="ij")
    V = V.ravel()
    W = W.ravel()
    n = V.size
    steps = config.steps
    times = (np.arange(steps) + 1) * config.sim_dt

    pose = state.odom_pose
    th = pose.theta + W[:, None] * times[None, :]
    w_safe = np.where(np.abs(W) < OMEGA_EPS, 1.0, W)
    r = V / w_safe
    arc_x = pose.x + r[:, None] * (np.sin(th) - math.sin(pose.theta))
    arc_y = pose.y - r[:, None] * (np.cos(th) - math.cos(pose.theta))
    line_x = pose.x + V[:, None] * times[None, :] * math.cos(pose.theta)
    line_y = pose.y + V[:, None] * times[None, :] * math.sin(pose.theta)
    straight = (np.abs(W) < OMEGA_EPS)[:, None]
    xs = np.where(straight, line_x, arc_x)
    ys = np.where(straight, line_y, arc_y)

    clear = _grid_clearance(costmap, xs.ravel(), ys.ravel()).reshape(n, steps)
    min_clear = clear.min(axis=1)
    feasible = min_clear >= config.robot_radius
    if not feasible.any():
        return Twist2D(0.0, 0.0, config.limits.omega_max / 2.0), []

    err = np.abs(_norm_angles(np.arctan2(goal_in_odom.y - ys[:, -1],
                                         goal_in_odom.x - xs[:, -1]) - th[:, -1]))
    w = config.weights
    scores = (w.heading * (1.0 - err / math.pi)
              + w.clearance * np.minimum(1.0, min_clear / config.inflation_radius)
              + w.velocity * (V / config.limits.v_max))
    scores[~feasible] = -np.inf
    best = int(np.argmax(scores))

    traj = [Pose2D(float(xs[best, k]), float(ys[best, k]),
                   normalize_angle(float(th[best, k]))) for k in range(steps)]
    return Twist2D(float(V[best]), 0.0, float(W[best])), traj


def _norm_angles(a: np.ndarray) -> np.ndarray:
    return np.mod(a + math.pi, 2.0 * math.pi) - math.pi
