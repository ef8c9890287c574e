import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from blendnav.geometry import (Pose2D, Twist2D, bearing_to, distance_to_goal,
                               normalize_angle, to_robot_frame)

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


class TestNormalizeAngle:
    @pytest.mark.parametrize("theta,expected", [
        (0.0, 0.0),
        (math.pi, math.pi),          # pi maps to itself, -pi is excluded
        (-math.pi, math.pi),
        (3 * math.pi, math.pi),
        (2 * math.pi, 0.0),
        (math.pi / 2 + 4 * math.pi, math.pi / 2),
    ])
    def test_known_values(self, theta, expected):
        assert normalize_angle(theta) == pytest.approx(expected, abs=1e-12)

    @given(finite)
    def test_range(self, theta):
        w = normalize_angle(theta)
        assert -math.pi < w <= math.pi

    @given(st.floats(min_value=-100.0, max_value=100.0, allow_nan=False))
    def test_equivalent_angle(self, theta):
        w = normalize_angle(theta)
        assert math.sin(w) == pytest.approx(math.sin(theta), abs=1e-9)
        assert math.cos(w) == pytest.approx(math.cos(theta), abs=1e-9)


class TestDistanceToGoal:
    def test_3_4_5_triangle(self):
        assert distance_to_goal(Pose2D(0, 0, 0), Pose2D(3, 4)) == 5.0

    def test_at_goal(self):
        assert distance_to_goal(Pose2D(2, 2, 1.0), Pose2D(2, 2)) == 0.0

    def test_hand_value(self):
        assert distance_to_goal(Pose2D(1, 1, 0), Pose2D(4, 5)) == 5.0

    def test_heading_ignored(self):
        a = distance_to_goal(Pose2D(0, 0, 0.0), Pose2D(1, 1))
        b = distance_to_goal(Pose2D(0, 0, 2.5), Pose2D(1, 1))
        assert a == b


class TestBearing:
    def test_dead_ahead(self):
        assert bearing_to(Pose2D(0, 0, 0), Pose2D(5, 0)) == 0.0

    def test_left_is_positive(self):
        assert bearing_to(Pose2D(0, 0, 0), Pose2D(0, 1)) == pytest.approx(math.pi / 2)

    def test_behind(self):
        assert abs(bearing_to(Pose2D(0, 0, 0), Pose2D(-1, 0))) == pytest.approx(math.pi)


class TestRobotFrame:
    def test_identity_at_origin(self):
        assert to_robot_frame(Pose2D(0, 0, 0), 3.0, 4.0) == (3.0, 4.0)

    def test_quarter_turn(self):
        lx, ly = to_robot_frame(Pose2D(0, 0, math.pi / 2), 0.0, 2.0)
        assert lx == pytest.approx(2.0)
        assert ly == pytest.approx(0.0, abs=1e-12)

    @given(finite, finite, st.floats(min_value=-10, max_value=10), finite, finite)
    def test_distance_preserved(self, x, y, theta, px, py):
        lx, ly = to_robot_frame(Pose2D(x, y, theta), px, py)
        assert math.hypot(lx, ly) == pytest.approx(
            math.hypot(px - x, py - y), rel=1e-9, abs=1e-6)


def test_twist_zero():
    assert Twist2D.zero() == Twist2D(0.0, 0.0, 0.0)


def test_pose_is_immutable():
    with pytest.raises(Exception):
        Pose2D(0, 0, 0).x = 1.0
