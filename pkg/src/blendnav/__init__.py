"""blendnav: blended shared-control 2D navigation simulator and harness."""

from .blend import BlendParams, BlendState, blend, blend_step, \
    command_difference, compute_alpha
from .geometry import Pose2D, Twist2D, distance_to_goal
from .kinematics import KinematicLimits, RobotState, clamp_twist, \
    integrate_unicycle, update_odometry

__version__ = "0.1.0"
