"""Rolling robot-centered costmap built from lidar scans.

This is the only world knowledge the autonomous agent gets: the window
recenters on the *odometry* pose every update and cells that scroll out are
forgotten, so there is no global map and drift skews the agent's view.
"""

from __future__ import annotations

import base64
import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy import ndimage

from .geometry import Pose2D
from .world import COST_OCCUPIED, FREE, OCCUPIED, UNKNOWN, LidarScan, OccupancyGrid


@dataclass
class CostmapConfig:
    size: float = 6.0              # window side, meters
    resolution: float = 0.05
    inflation_radius: float = 0.35
    decay: bool = True             # re-observed free space clears old hits
    # crop half-width (m) around the robot inside which the planner's
    # clearance field is exact; must cover the rollout reach plus a margin
    clearance_reach: float = 2.2

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("resolution must be > 0")
        if self.size <= 2 * self.inflation_radius:
            raise ValueError("window must be wider than twice the inflation radius")


def inflate(costmap: OccupancyGrid, inflation_radius: float) -> OccupancyGrid:
    """Write costs that fall off linearly from 255 at an obstacle to 0 at the radius."""
    out = costmap.copy()
    occ = out.occupancy == OCCUPIED
    if not occ.any():
        out.cost[:] = 0
        return out
    dist = ndimage.distance_transform_edt(~occ, sampling=out.resolution)
    scale = np.clip(1.0 - dist / inflation_radius, 0.0, 1.0)
    out.cost = np.floor(scale * COST_OCCUPIED).astype(np.uint8)
    out.cost[occ] = COST_OCCUPIED
    return out


def clearance(costmap: OccupancyGrid, x: float, y: float) -> float:
    """Exact Euclidean distance from (x, y) to the nearest occupied cell center."""
    if not costmap.in_bounds(x, y):
        raise ValueError("clearance query outside the costmap window")
    centers = costmap.occupied_centers()
    if len(centers) == 0:
        return math.inf
    d2 = (centers[:, 0] - x) ** 2 + (centers[:, 1] - y) ** 2
    return float(np.sqrt(d2.min()))


@njit(cache=True)
def _fuse_scan(occupancy: np.ndarray, res: float, ox: float, oy: float,
               px: float, py: float, dirx: np.ndarray, diry: np.ndarray,
               ranges: np.ndarray, max_range: float, decay: bool) -> None:
    """Walk each beam cell by cell: free up to the hit, occupied at the hit."""
    height, width = occupancy.shape
    start_col = int(math.floor((px - ox) / res))
    start_row = int(math.floor((py - oy) / res))
    for b in range(dirx.shape[0]):
        rng = ranges[b]
        dx, dy = dirx[b], diry[b]
        if decay:
            col, row = start_col, start_row
            limit = rng - 0.5 * res
            step_c = 1 if dx > 0 else -1
            step_r = 1 if dy > 0 else -1
            t_max_x = ((col + (1 if dx > 0 else 0)) * res + ox - px) / dx \
                if dx != 0.0 else np.inf
            t_dx = res / abs(dx) if dx != 0.0 else np.inf
            t_max_y = ((row + (1 if dy > 0 else 0)) * res + oy - py) / dy \
                if dy != 0.0 else np.inf
            t_dy = res / abs(dy) if dy != 0.0 else np.inf
            t = 0.0
            while t < limit:
                if 0 <= row < height and 0 <= col < width:
                    occupancy[row, col] = 0   # FREE
                elif t > 0.0:
                    break                     # left the window for good
                if t_max_x < t_max_y:
                    t = t_max_x
                    col += step_c
                    t_max_x += t_dx
                else:
                    t = t_max_y
                    row += step_r
                    t_max_y += t_dy
        if rng < max_range:
            hc = int(math.floor((px + dx * rng - ox) / res))
            hr = int(math.floor((py + dy * rng - oy) / res))
            if 0 <= hr < height and 0 <= hc < width:
                occupancy[hr, hc] = 1         # OCCUPIED


class LocalCostmap:
    """Rolling window updated from scans, with a cached distance field.

    `grid` is the current snapshot; `distance_field` holds, per cell, the
    Euclidean distance (meters) to the nearest occupied cell center, exact
    inside the clearance_reach crop around the robot (the region any rollout
    can touch) and a large sentinel elsewhere.
    """

    def __init__(self, config: CostmapConfig | None = None):
        self.config = config or CostmapConfig()
        n = int(round(self.config.size / self.config.resolution))
        self.cells = n
        self.grid = OccupancyGrid.empty(self.config.resolution, n, n,
                                        Pose2D(), fill=UNKNOWN)
        self._sentinel = float(n) * self.config.resolution
        self.distance_field = np.full((n, n), self._sentinel)
        self._center_row = 0
        self._center_col = 0
        self._initialized = False

    def update(self, scan: LidarScan, odom_pose: Pose2D) -> OccupancyGrid:
        """Recenter on odom_pose and fuse one scan; returns the new snapshot."""
        cfg = self.config
        res = cfg.resolution
        half = self.cells // 2
        new_row = int(math.floor(odom_pose.y / res))
        new_col = int(math.floor(odom_pose.x / res))
        if not self._initialized:
            self._initialized = True
            self._center_row, self._center_col = new_row, new_col
        else:
            self._shift(new_row - self._center_row, new_col - self._center_col)
            self._center_row, self._center_col = new_row, new_col
        origin = Pose2D((new_col - half) * res, (new_row - half) * res, 0.0)
        self.grid.origin = origin

        angles = odom_pose.theta + scan.angles()
        _fuse_scan(self.grid.occupancy, res, origin.x, origin.y,
                   odom_pose.x, odom_pose.y,
                   np.cos(angles), np.sin(angles),
                   np.asarray(scan.ranges, dtype=np.float64),
                   scan.max_range, cfg.decay)

        self._refresh_distance_field()
        return self.snapshot()

    def _refresh_distance_field(self) -> None:
        n = self.cells
        res = self.config.resolution
        reach = int(math.ceil(self.config.clearance_reach / res))
        half = n // 2
        lo = max(0, half - reach)
        hi = min(n, half + reach + 1)
        crop = self.grid.occupancy[lo:hi, lo:hi] == OCCUPIED
        self.distance_field = np.full((n, n), self._sentinel)
        if crop.any():
            self.distance_field[lo:hi, lo:hi] = \
                ndimage.distance_transform_edt(~crop, sampling=res)
        else:
            self.distance_field[lo:hi, lo:hi] = self._sentinel

    def snapshot(self) -> OccupancyGrid:
        snap = self.grid.copy()
        snap.dist_field = self.distance_field
        return snap

    def serialize(self) -> dict:
        """Wire form for the teleop bridge: header + base64 row-major cost bytes."""
        inflated = inflate(self.grid, self.config.inflation_radius)
        return {
            "width": inflated.width,
            "height": inflated.height,
            "resolution": inflated.resolution,
            "origin": {"x": inflated.origin.x, "y": inflated.origin.y,
                       "theta": inflated.origin.theta},
            "data_b64": base64.b64encode(inflated.cost.tobytes()).decode("ascii"),
        }

    def _shift(self, drow: int, dcol: int) -> None:
        """Scroll the window; cells entering the window are unknown."""
        if drow == 0 and dcol == 0:
            return
        n = self.cells
        fresh = np.full((n, n), UNKNOWN, dtype=np.int8)
        src_r0, src_r1 = max(0, drow), min(n, n + drow)
        src_c0, src_c1 = max(0, dcol), min(n, n + dcol)
        dst_r0, dst_r1 = max(0, -drow), min(n, n - drow)
        dst_c0, dst_c1 = max(0, -dcol), min(n, n - dcol)
        if src_r0 < src_r1 and src_c0 < src_c1:
            fresh[dst_r0:dst_r1, dst_c0:dst_c1] = \
                self.grid.occupancy[src_r0:src_r1, src_c0:src_c1]
        self.grid.occupancy = fresh
