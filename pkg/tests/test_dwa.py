import math

import numpy as np
import pytest

from blendnav.dwa import (DwaConfig, ScoreWeights, dynamic_window, plan_dwa,
                          rollout, score_trajectory)
from blendnav.geometry import Pose2D, Twist2D, normalize_angle
from blendnav.kinematics import KinematicLimits, RobotState, integrate_unicycle
from blendnav.world import COST_OCCUPIED, OCCUPIED, OccupancyGrid


def empty_costmap(n=120, res=0.05, origin=Pose2D(-3.0, -3.0, 0.0)):
    return OccupancyGrid.empty(res, n, n, origin)


def occupy(grid, x, y):
    r, c = grid.world_to_cell(x, y)
    grid.occupancy[r, c] = OCCUPIED
    grid.cost[r, c] = COST_OCCUPIED
    grid.dist_field = None      # invalidate any cached field


def reference_score(traj, goal, costmap, config, v):
    """Independent reimplementation of the published scoring formula."""
    dists = []
    for p in traj:
        centers = costmap.occupied_centers()
        if len(centers) == 0:
            dists.append(math.inf)
            continue
        r, c = costmap.world_to_cell(p.x, p.y)
        if not (0 <= r < costmap.height and 0 <= c < costmap.width):
            dists.append(math.inf)
            continue
        cx, cy = costmap.cell_to_world(r, c)
        dists.append(min(math.hypot(ox - cx, oy - cy) for ox, oy in centers))
    min_clear = min(dists)
    if min_clear < config.robot_radius:
        return None
    end = traj[-1]
    err = abs(normalize_angle(math.atan2(goal.y - end.y, goal.x - end.x)
                              - end.theta))
    w = config.weights
    return (w.heading * (1 - err / math.pi)
            + w.clearance * min(1.0, min_clear / config.inflation_radius)
            + w.velocity * v / config.limits.v_max)


class TestDynamicWindow:
    def test_reachability_box(self):
        lim = KinematicLimits(v_max=1.0, omega_max=2.0, a_lin=0.5, a_ang=4.0)
        (v_lo, v_hi), _ = dynamic_window(Twist2D.zero(), lim, 0.1)
        assert (v_lo, v_hi) == (0.0, pytest.approx(0.05))

    def test_absolute_bound_binds(self):
        lim = KinematicLimits(v_max=1.0, omega_max=2.0, a_lin=100.0, a_ang=4.0)
        (_, v_hi), _ = dynamic_window(Twist2D(1.0, 0, 0), lim, 0.1)
        assert v_hi == 1.0

    def test_omega_symmetric_about_zero(self):
        lim = KinematicLimits()
        _, (w_lo, w_hi) = dynamic_window(Twist2D.zero(), lim, 0.25)
        assert w_lo == -w_hi

    def test_v_never_negative(self):
        lim = KinematicLimits()
        (v_lo, _), _ = dynamic_window(Twist2D(0.01, 0, 0), lim, 0.25)
        assert v_lo == 0.0


class TestRollout:
    def test_straight_line_poses(self):
        traj = rollout(Pose2D(0, 0, 0), 1.0, 0.0, 1.0, 0.25)
        assert [round(p.x, 10) for p in traj] == [0.25, 0.5, 0.75, 1.0]

    def test_spin_in_place(self):
        traj = rollout(Pose2D(0, 0, 0), 0.0, 1.0, 1.0, 0.25)
        assert all(p.x == 0 and p.y == 0 for p in traj)
        assert traj[-1].theta == pytest.approx(1.0)

    def test_quarter_arc_endpoint(self):
        traj = rollout(Pose2D(0, 0, 0), 1.0, 1.0, math.pi / 2, math.pi / 20)
        assert traj[-1].x == pytest.approx(1.0, abs=1e-9)
        assert traj[-1].y == pytest.approx(1.0, abs=1e-9)

    def test_matches_repeated_integration(self):
        traj = rollout(Pose2D(1, 2, 0.5), 0.7, -0.9, 1.5, 0.1)
        cur = Pose2D(1, 2, 0.5)
        for p in traj:
            cur = integrate_unicycle(cur, Twist2D(0.7, 0, -0.9), 0.1)
            assert p == cur


class TestScoreTrajectory:
    CFG = DwaConfig()

    def test_perfect_trajectory_max_score(self):
        traj = rollout(Pose2D(0, 0, 0), 1.0, 0.0, 1.5, 0.1)
        score = score_trajectory(traj, Pose2D(10, 0), empty_costmap(),
                                 self.CFG, 1.0)
        assert score == pytest.approx(0.6 + 0.25 + 0.15)

    def test_occupied_cell_infeasible(self):
        grid = empty_costmap()
        occupy(grid, 0.5, 0.0)
        traj = rollout(Pose2D(0, 0, 0), 1.0, 0.0, 1.5, 0.1)
        assert score_trajectory(traj, Pose2D(10, 0), grid, self.CFG, 1.0) is None

    def test_ordering_matches_reference(self):
        grid = empty_costmap()
        occupy(grid, 1.0, 0.4)
        occupy(grid, 0.8, -0.6)
        goal = Pose2D(3.0, 1.0)
        scored = []
        for v, w in [(1.0, 0.0), (0.8, 0.5), (0.8, -0.5), (0.5, 1.0)]:
            traj = rollout(Pose2D(0, 0, 0), v, w, 1.5, 0.1)
            got = score_trajectory(traj, goal, grid, self.CFG, v)
            ref = reference_score(traj, goal, grid, self.CFG, v)
            if ref is None:
                assert got is None
            else:
                assert got == pytest.approx(ref, abs=1e-9)
            scored.append((got, ref))
        got_order = sorted(range(4), key=lambda i: -1 if scored[i][0] is None
                           else scored[i][0])
        ref_order = sorted(range(4), key=lambda i: -1 if scored[i][1] is None
                           else scored[i][1])
        assert got_order == ref_order


class TestPlanDwa:
    CFG = DwaConfig()

    def state(self, v=0.9):
        return RobotState(true_pose=Pose2D(0, 0, 0), odom_pose=Pose2D(0, 0, 0),
                          current_twist=Twist2D(v, 0, 0))

    def test_goal_straight_ahead(self):
        cmd, traj = plan_dwa(self.state(), Pose2D(10, 0), empty_costmap(),
                             self.CFG)
        (_, v_hi), _ = dynamic_window(Twist2D(0.9, 0, 0), self.CFG.limits,
                                      self.CFG.window_dt)
        assert cmd.vx == pytest.approx(v_hi)
        assert abs(cmd.omega) < 0.15
        assert traj

    def test_goal_behind_turns_toward_it(self):
        cmd, _ = plan_dwa(self.state(v=0.0), Pose2D(-5, 1), empty_costmap(),
                          self.CFG)
        assert cmd.omega > 0      # goal to the left-rear: turn left

    def test_all_infeasible_recovery(self):
        grid = empty_costmap()
        grid.occupancy[:] = OCCUPIED
        grid.dist_field = None
        cmd, traj = plan_dwa(self.state(), Pose2D(10, 0), grid, self.CFG)
        assert cmd == Twist2D(0.0, 0.0, self.CFG.limits.omega_max / 2.0)
        assert traj == []

    def test_chosen_trajectory_is_safe(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            grid = empty_costmap(n=120)
            for x, y in rng.uniform(-2.4, 2.4, size=(10, 2)):
                if math.hypot(x, y) > 0.3:
                    occupy(grid, float(x), float(y))
            cmd, traj = plan_dwa(self.state(v=float(rng.uniform(0, 1))),
                                 Pose2D(*rng.uniform(-3, 3, size=2)),
                                 grid, self.CFG)
            for p in traj:
                r, c = grid.world_to_cell(p.x, p.y)
                if 0 <= r < grid.height and 0 <= c < grid.width:
                    assert grid.occupancy[r, c] != OCCUPIED

    def test_deterministic(self):
        grid = empty_costmap()
        occupy(grid, 1.0, 0.2)
        a = plan_dwa(self.state(), Pose2D(5, 2), grid, self.CFG)
        b = plan_dwa(self.state(), Pose2D(5, 2), grid, self.CFG)
        assert a[0] == b[0]
        assert a[1] == b[1]

    def test_tie_break_lowest_v_then_omega(self):
        # zero weights on heading and velocity, empty map: every candidate
        # scores identically, so the first sample (lowest v, then omega) wins
        cfg = DwaConfig(weights=ScoreWeights(heading=0.0, clearance=1.0,
                                             velocity=0.0))
        cmd, _ = plan_dwa(self.state(v=0.5), Pose2D(10, 0), empty_costmap(),
                          cfg)
        (v_lo, _), (w_lo, _) = dynamic_window(Twist2D(0.5, 0, 0), cfg.limits,
                                              cfg.window_dt)
        assert cmd.vx == pytest.approx(v_lo)
        assert cmd.omega == pytest.approx(w_lo)


def test_config_validation():
    with pytest.raises(ValueError):
        DwaConfig(v_samples=2)
    with pytest.raises(ValueError):
        ScoreWeights(heading=-0.1)
    with pytest.raises(ValueError):
        ScoreWeights(heading=0, clearance=0, velocity=0)
