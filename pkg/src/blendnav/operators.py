"""Operator command sources: a scripted human proxy and the live pass-through.

The scripted operator is a pure-pursuit follower with a reaction delay and
heading-rate noise. It is deliberately imperfect: it reads the *perceived*
pose (odometry, possibly feedback-delayed), so drift and latency degrade it
the same way they degrade a human watching the GUI.
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, field

from .geometry import Pose2D, Twist2D, to_robot_frame


@dataclass
class ScriptedOperator:
    waypoints: list[Pose2D]
    lookahead: float = 0.8
    reaction_delay: float = 0.25
    heading_noise_sd: float = 0.8      # rad/s
    cruise_speed: float = 1.0
    omega_max: float = 2.0
    # stuck recovery: back up and retry when commanding produces no motion,
    # the way a human notices a bump on the GUI and reverses
    stuck_timeout: float = 1.5
    stuck_distance: float = 0.15
    backup_duration: float = 1.2
    backup_speed: float = 0.4

    _history: deque = field(default_factory=deque, repr=False)
    _ref_pos: Pose2D | None = field(default=None, repr=False)
    _ref_time: float = 0.0
    _backup_until: float = -1.0
    _backup_omega: float = 0.0

    def __post_init__(self):
        if self.lookahead <= 0:
            raise ValueError("lookahead must be > 0")
        if self.reaction_delay < 0:
            raise ValueError("reaction_delay must be >= 0")
        if not self.waypoints:
            raise ValueError("operator needs a route")

    # --- route helpers ---

    def _closest_arclength(self, pose: Pose2D) -> float:
        """Arc length along the polyline of the point closest to pose."""
        best_s, best_d = 0.0, math.inf
        s_accum = 0.0
        pts = self.waypoints
        if len(pts) == 1:
            return 0.0
        for a, b in zip(pts, pts[1:]):
            seg = a.position_distance(b)
            if seg > 0:
                t = ((pose.x - a.x) * (b.x - a.x) + (pose.y - a.y) * (b.y - a.y)) / seg**2
                t = min(1.0, max(0.0, t))
                px = a.x + t * (b.x - a.x)
                py = a.y + t * (b.y - a.y)
                d = math.hypot(pose.x - px, pose.y - py)
                if d < best_d:
                    best_d = d
                    best_s = s_accum + t * seg
            s_accum += seg
        return best_s

    def _point_at(self, s: float) -> Pose2D:
        pts = self.waypoints
        if len(pts) == 1:
            return pts[0]
        total = sum(a.position_distance(b) for a, b in zip(pts, pts[1:]))
        s = min(max(s, 0.0), total)
        for a, b in zip(pts, pts[1:]):
            seg = a.position_distance(b)
            if s <= seg and seg > 0:
                t = s / seg
                return Pose2D(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
            s -= seg
        return pts[-1]

    def lookahead_point(self, pose: Pose2D) -> Pose2D:
        return self._point_at(self._closest_arclength(pose) + self.lookahead)

    # --- command generation ---

    def step(self, perceived_pose: Pose2D, now: float,
             rng: random.Random) -> Twist2D:
        """Pure pursuit toward the lookahead point, using stale state when a
        reaction delay is configured."""
        self._history.append((now, perceived_pose))
        cutoff = now - self.reaction_delay
        while len(self._history) > 1 and self._history[1][0] <= cutoff:
            self._history.popleft()
        reacted = self._history[0][1]

        if self._ref_pos is None:
            self._ref_pos = perceived_pose
            self._ref_time = now
        elif perceived_pose.position_distance(self._ref_pos) > self.stuck_distance:
            self._ref_pos = perceived_pose
            self._ref_time = now

        if now < self._backup_until:
            omega = self._backup_omega + rng.gauss(0.0, self.heading_noise_sd) \
                if self.heading_noise_sd > 0 else self._backup_omega
            omega = min(self.omega_max, max(-self.omega_max, omega))
            return Twist2D(-self.backup_speed, 0.0, omega)
        if now - self._ref_time > self.stuck_timeout:
            self._backup_until = now + self.backup_duration
            self._backup_omega = rng.uniform(-0.8, 0.8)
            self._ref_time = self._backup_until   # grace before re-triggering
            return Twist2D(-self.backup_speed, 0.0, self._backup_omega)

        target = self.lookahead_point(reacted)
        lx, ly = to_robot_frame(reacted, target.x, target.y)
        if lx <= 0.0:
            # target behind: rotate toward it rather than driving blind
            omega = math.copysign(self.omega_max, ly if ly != 0 else 1.0)
            v = 0.0
        else:
            dist2 = lx * lx + ly * ly
            kappa = 2.0 * ly / dist2
            # slow down when the target is far off-axis, as a human does;
            # this also damps the feedback loop under input latency
            v = self.cruise_speed * max(0.15, lx / math.sqrt(dist2))
            omega = self.cruise_speed * kappa
        if self.heading_noise_sd > 0:
            omega += rng.gauss(0.0, self.heading_noise_sd)
        omega = min(self.omega_max, max(-self.omega_max, omega))
        return Twist2D(v, 0.0, omega)


def live_step(bridge_latest: Twist2D | None) -> Twist2D:
    """Latest human command from the bridge mailbox, or a safe zero."""
    return bridge_latest if bridge_latest is not None else Twist2D.zero()
