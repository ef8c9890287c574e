"""Static map, dynamic obstacles, lidar sensing and collision checks."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit
from scipy.spatial import cKDTree

from .geometry import Pose2D, distance_to_goal

FREE = 0
OCCUPIED = 1
UNKNOWN = -1

COST_OCCUPIED = 255


class ScenarioError(ValueError):
    """Raised when a scenario file fails to parse or violates an invariant."""


@dataclass
class OccupancyGrid:
    """Axis-aligned occupancy grid with per-cell cost.

    `occupancy` and `cost` are indexed [row, col] = [y-cell, x-cell].
    """

    resolution: float
    width: int
    height: int
    origin: Pose2D
    occupancy: np.ndarray
    cost: np.ndarray
    # optional cache: per-cell distance (m) to the nearest occupied cell center
    dist_field: np.ndarray | None = None

    @staticmethod
    def empty(resolution: float, width: int, height: int,
              origin: Pose2D = Pose2D(), fill: int = FREE) -> "OccupancyGrid":
        if resolution <= 0:
            raise ScenarioError("resolution must be > 0")
        occ = np.full((height, width), fill, dtype=np.int8)
        cost = np.zeros((height, width), dtype=np.uint8)
        return OccupancyGrid(resolution, width, height, origin, occ, cost)

    def copy(self) -> "OccupancyGrid":
        return OccupancyGrid(self.resolution, self.width, self.height, self.origin,
                             self.occupancy.copy(), self.cost.copy(),
                             None if self.dist_field is None else self.dist_field.copy())

    # --- world <-> cell mapping (bijective within bounds) ---

    def world_to_cell(self, x: float, y: float) -> tuple[int, int]:
        col = int(math.floor((x - self.origin.x) / self.resolution))
        row = int(math.floor((y - self.origin.y) / self.resolution))
        return row, col

    def cell_to_world(self, row: int, col: int) -> tuple[float, float]:
        """Center of cell (row, col) in world coordinates."""
        x = self.origin.x + (col + 0.5) * self.resolution
        y = self.origin.y + (row + 0.5) * self.resolution
        return x, y

    def in_bounds(self, x: float, y: float) -> bool:
        row, col = self.world_to_cell(x, y)
        return 0 <= row < self.height and 0 <= col < self.width

    def mark_occupied(self, rows: np.ndarray, cols: np.ndarray) -> None:
        self.occupancy[rows, cols] = OCCUPIED
        self.cost[rows, cols] = COST_OCCUPIED

    def occupied_centers(self) -> np.ndarray:
        """(N, 2) array of world coordinates of occupied cell centers."""
        rows, cols = np.nonzero(self.occupancy == OCCUPIED)
        xs = self.origin.x + (cols + 0.5) * self.resolution
        ys = self.origin.y + (rows + 0.5) * self.resolution
        return np.column_stack([xs, ys])


@dataclass
class LidarScan:
    angle_min: float
    angle_max: float
    beam_count: int
    ranges: np.ndarray
    max_range: float

    def angles(self) -> np.ndarray:
        """Beam angles relative to the robot heading (endpoint excluded)."""
        return self.angle_min + (self.angle_max - self.angle_min) * \
            np.arange(self.beam_count) / self.beam_count


@dataclass
class ScanParams:
    beam_count: int = 360
    max_range: float = 5.0
    angle_min: float = -math.pi
    angle_max: float = math.pi


@dataclass
class DynamicObstacle:
    footprint_radius: float
    waypoints: list[Pose2D]
    speed: float
    loop: bool = False

    def __post_init__(self):
        if self.speed < 0:
            raise ScenarioError("obstacle speed must be >= 0")
        if not self.waypoints:
            raise ScenarioError("obstacle needs at least one waypoint")

    def segment_lengths(self) -> list[float]:
        pts = self.waypoints
        return [pts[i].position_distance(pts[i + 1]) for i in range(len(pts) - 1)]

    def total_length(self) -> float:
        return sum(self.segment_lengths())

    def pose_at(self, s: float) -> Pose2D:
        """Pose at arc length s along the waypoint polyline (clamped or looped)."""
        total = self.total_length()
        if total <= 0.0:
            return self.waypoints[0]
        if self.loop:
            s = s % total
        else:
            s = min(max(s, 0.0), total)
        for a, b in zip(self.waypoints, self.waypoints[1:]):
            seg = a.position_distance(b)
            if s <= seg or seg == 0.0:
                if seg == 0.0:
                    continue
                frac = s / seg
                return Pose2D(a.x + frac * (b.x - a.x), a.y + frac * (b.y - a.y),
                              math.atan2(b.y - a.y, b.x - a.x))
            s -= seg
        last = self.waypoints[-1]
        prev = self.waypoints[-2]
        return Pose2D(last.x, last.y, math.atan2(last.y - prev.y, last.x - prev.x))


@dataclass
class Scenario:
    name: str
    static_map: OccupancyGrid
    start: Pose2D
    goal: Pose2D
    goal_tolerance: float
    robot_radius: float
    dynamic_obstacles: list[DynamicObstacle]
    timeout: float
    operator_route: list[Pose2D] = field(default_factory=list)

    # built lazily, see _static_index
    _kdtree: cKDTree | None = field(default=None, repr=False, compare=False)
    _occ_mask: np.ndarray | None = field(default=None, repr=False, compare=False)

    def _static_index(self) -> cKDTree | None:
        """KD-tree over occupied cell centers of the static map."""
        if self._occ_mask is None:
            self.occupied_mask()
        if self._kdtree is None and self._occ_mask.any():
            self._kdtree = cKDTree(self.static_map.occupied_centers())
        return self._kdtree

    def occupied_mask(self) -> np.ndarray:
        if self._occ_mask is None:
            self._occ_mask = self.static_map.occupancy == OCCUPIED
        return self._occ_mask


@dataclass
class WorldState:
    """Scenario plus the mutable progress of each dynamic obstacle."""

    scenario: Scenario
    obstacle_progress: list[float] = field(default_factory=list)

    def __post_init__(self):
        if not self.obstacle_progress:
            self.obstacle_progress = [0.0] * len(self.scenario.dynamic_obstacles)

    def obstacle_poses(self) -> list[Pose2D]:
        return [ob.pose_at(s) for ob, s in
                zip(self.scenario.dynamic_obstacles, self.obstacle_progress)]


# ---------------------------------------------------------------------------
# scenario loading

def _require(cond: bool, path: str, msg: str) -> None:
    if not cond:
        raise ScenarioError(f"{path}: {msg}")


def _build_grid(cfg: dict) -> OccupancyGrid:
    resolution = float(cfg.get("resolution", 0.05))
    _require(resolution > 0, "resolution", "must be > 0")
    grid_cfg = cfg.get("grid")
    _require(isinstance(grid_cfg, dict), "grid", "missing or not an object")

    if "rows" in grid_cfg:
        rows = grid_cfg["rows"]
        _require(len(rows) > 0 and len(set(len(r) for r in rows)) == 1,
                 "grid.rows", "rows must be nonempty and rectangular")
        height, width = len(rows), len(rows[0])
        grid = OccupancyGrid.empty(resolution, width, height)
        # rows[0] is the top of the map; flip so row 0 is y = 0
        for j, line in enumerate(reversed(rows)):
            for i, ch in enumerate(line):
                if ch == "#":
                    grid.occupancy[j, i] = OCCUPIED
                    grid.cost[j, i] = COST_OCCUPIED
        return grid

    size = grid_cfg.get("size")
    _require(isinstance(size, list) and len(size) == 2, "grid.size",
             "expected [width_m, height_m]")
    width = int(round(size[0] / resolution))
    height = int(round(size[1] / resolution))
    _require(width > 0 and height > 0, "grid.size", "must be positive")
    grid = OccupancyGrid.empty(resolution, width, height)

    xs = (np.arange(width) + 0.5) * resolution
    ys = (np.arange(height) + 0.5) * resolution
    cx, cy = np.meshgrid(xs, ys)
    occ = np.zeros((height, width), dtype=bool)
    for k, rect in enumerate(grid_cfg.get("rects", [])):
        _require(len(rect) == 4, f"grid.rects[{k}]", "expected [x0, y0, x1, y1]")
        x0, y0, x1, y1 = map(float, rect)
        occ |= (cx >= min(x0, x1)) & (cx <= max(x0, x1)) & \
               (cy >= min(y0, y1)) & (cy <= max(y0, y1))
    for k, disc in enumerate(grid_cfg.get("discs", [])):
        _require(len(disc) == 3, f"grid.discs[{k}]", "expected [x, y, radius]")
        dx, dy, r = map(float, disc)
        occ |= (cx - dx) ** 2 + (cy - dy) ** 2 <= r * r
    grid.occupancy[occ] = OCCUPIED
    grid.cost[occ] = COST_OCCUPIED
    return grid


def load_scenario(source) -> Scenario:
    """Build a validated Scenario from a dict, JSON string, or file path."""
    if isinstance(source, (str, Path)):
        text = Path(source).read_text() if Path(str(source)).exists() else str(source)
        try:
            cfg = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"scenario does not parse as JSON: {exc}") from exc
    elif isinstance(source, dict):
        cfg = source
    else:
        raise ScenarioError(f"unsupported scenario source type {type(source)!r}")

    grid = _build_grid(cfg)

    start_raw = cfg.get("start")
    _require(isinstance(start_raw, list) and len(start_raw) in (2, 3), "start",
             "expected [x, y] or [x, y, theta]")
    start = Pose2D(float(start_raw[0]), float(start_raw[1]),
                   float(start_raw[2]) if len(start_raw) == 3 else 0.0).normalized()

    goal_raw = cfg.get("goal")
    _require(isinstance(goal_raw, list) and len(goal_raw) >= 2, "goal",
             "expected [x, y]")
    goal = Pose2D(float(goal_raw[0]), float(goal_raw[1]), 0.0)

    goal_tolerance = float(cfg.get("goal_tolerance", 0.5))
    _require(goal_tolerance > 0, "goal_tolerance", "must be > 0")
    robot_radius = float(cfg.get("robot_radius", 0.2))
    _require(robot_radius > 0, "robot_radius", "must be > 0")
    timeout = float(cfg.get("timeout", 60.0))
    _require(timeout > 0, "timeout", "must be > 0")

    obstacles = []
    for k, ob in enumerate(cfg.get("obstacles", [])):
        try:
            obstacles.append(DynamicObstacle(
                footprint_radius=float(ob["radius"]),
                waypoints=[Pose2D(float(w[0]), float(w[1])) for w in ob["waypoints"]],
                speed=float(ob.get("speed", 0.0)),
                loop=bool(ob.get("loop", False)),
            ))
        except (KeyError, TypeError, ScenarioError) as exc:
            raise ScenarioError(f"obstacles[{k}]: {exc}") from exc

    route = [Pose2D(float(w[0]), float(w[1])) for w in cfg.get("operator_route", [])]

    scenario = Scenario(
        name=str(cfg.get("name", "unnamed")),
        static_map=grid, start=start, goal=goal,
        goal_tolerance=goal_tolerance, robot_radius=robot_radius,
        dynamic_obstacles=obstacles, timeout=timeout, operator_route=route,
    )

    _require(grid.in_bounds(start.x, start.y), "start", "outside map bounds")
    _require(grid.in_bounds(goal.x, goal.y), "goal", "outside map bounds")
    world = WorldState(scenario)
    _require(not check_collision(world, start, robot_radius), "start",
             "start pose collides with an obstacle")
    _require(not check_collision(world, Pose2D(goal.x, goal.y), robot_radius),
             "goal", "goal position collides with an obstacle")
    return scenario


def scenario_path(name: str) -> Path:
    """Resolve a shipped scenario by bare name ('doorway') or pass a path through."""
    p = Path(name)
    if p.exists():
        return p
    shipped = Path(__file__).parent / "scenarios" / f"{name}.json"
    if shipped.exists():
        return shipped
    raise ScenarioError(f"unknown scenario {name!r}")


# ---------------------------------------------------------------------------
# dynamics + sensing

def step_dynamic_obstacles(world: WorldState, dt: float) -> list[Pose2D]:
    """Advance every obstacle speed*dt along its polyline; returns new poses."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    for i, ob in enumerate(world.scenario.dynamic_obstacles):
        world.obstacle_progress[i] += ob.speed * dt
    return world.obstacle_poses()


@njit(cache=True)
def _dda_ranges(occ: np.ndarray, res: float, ox: float, oy: float,
                px: float, py: float, dirx: np.ndarray, diry: np.ndarray,
                max_range: float) -> np.ndarray:
    """Exact grid traversal (Amanatides-Woo): distance along each beam to the
    boundary of the first occupied cell, or max_range."""
    height, width = occ.shape
    n = dirx.shape[0]
    out = np.full(n, max_range)
    start_col = int(math.floor((px - ox) / res))
    start_row = int(math.floor((py - oy) / res))
    for b in range(n):
        dx, dy = dirx[b], diry[b]
        col, row = start_col, start_row
        if occ[row, col]:
            out[b] = 0.0
            continue
        step_c = 1 if dx > 0 else -1
        step_r = 1 if dy > 0 else -1
        if dx != 0.0:
            t_max_x = ((col + (1 if dx > 0 else 0)) * res + ox - px) / dx
            t_dx = res / abs(dx)
        else:
            t_max_x = np.inf
            t_dx = np.inf
        if dy != 0.0:
            t_max_y = ((row + (1 if dy > 0 else 0)) * res + oy - py) / dy
            t_dy = res / abs(dy)
        else:
            t_max_y = np.inf
            t_dy = np.inf
        while True:
            if t_max_x < t_max_y:
                t = t_max_x
                col += step_c
                t_max_x += t_dx
            else:
                t = t_max_y
                row += step_r
                t_max_y += t_dy
            if t >= max_range or col < 0 or col >= width \
                    or row < 0 or row >= height:
                break
            if occ[row, col]:
                out[b] = t
                break
    return out


def raycast_scan(world: WorldState, true_pose: Pose2D,
                 params: ScanParams | None = None) -> LidarScan:
    """Cast lidar beams against the static grid and dynamic obstacle discs."""
    params = params or ScanParams()
    grid = world.scenario.static_map
    if not grid.in_bounds(true_pose.x, true_pose.y):
        raise ValueError("raycast pose outside map bounds")

    res = grid.resolution
    span = params.angle_max - params.angle_min
    rel = params.angle_min + span * np.arange(params.beam_count) / params.beam_count
    ang = true_pose.theta + rel
    dirx = np.cos(ang)
    diry = np.sin(ang)
    min_step = 0.5 * res

    occ = world.scenario.occupied_mask()
    ranges = _dda_ranges(occ, res, grid.origin.x, grid.origin.y,
                         true_pose.x, true_pose.y, dirx, diry, params.max_range)
    ranges = np.maximum(ranges, min_step)   # ranges stay > 0 by contract

    # dynamic obstacle discs: analytic ray-circle intersection
    for ob, pose in zip(world.scenario.dynamic_obstacles, world.obstacle_poses()):
        cx = pose.x - true_pose.x
        cy = pose.y - true_pose.y
        b = dirx * cx + diry * cy              # projection of center on ray
        c = cx * cx + cy * cy - ob.footprint_radius ** 2
        disc = b * b - c
        valid = (disc >= 0.0) & (b > 0.0)
        t_hit = b - np.sqrt(np.maximum(disc, 0.0))
        t_hit = np.where(valid & (t_hit > 0.0), t_hit, np.inf)
        ranges = np.minimum(ranges, np.maximum(t_hit, min_step))

    ranges = np.minimum(ranges, params.max_range)
    return LidarScan(params.angle_min, params.angle_max, params.beam_count,
                     ranges, params.max_range)


def check_collision(world: WorldState, pose: Pose2D, robot_radius: float) -> bool:
    """True iff an occupied cell center or obstacle disc is within robot_radius."""
    tree = world.scenario._static_index()
    if tree is not None:
        d, _ = tree.query([pose.x, pose.y])
        if d <= robot_radius:
            return True
    for ob, opose in zip(world.scenario.dynamic_obstacles, world.obstacle_poses()):
        if pose.position_distance(opose) <= robot_radius + ob.footprint_radius:
            return True
    return False


__all__ = [
    "FREE", "OCCUPIED", "UNKNOWN", "COST_OCCUPIED",
    "OccupancyGrid", "LidarScan", "ScanParams", "DynamicObstacle",
    "Scenario", "WorldState", "ScenarioError",
    "load_scenario", "scenario_path", "step_dynamic_obstacles",
    "raycast_scan", "check_collision", "distance_to_goal",
]
