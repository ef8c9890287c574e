import base64
import math

import numpy as np
import pytest

from blendnav.costmap import (CostmapConfig, LocalCostmap, clearance, inflate)
from blendnav.geometry import Pose2D
from blendnav.world import (COST_OCCUPIED, FREE, OCCUPIED, UNKNOWN,
                            OccupancyGrid, LidarScan, ScanParams)


def grid_with(cells, n=21, res=0.05, origin=Pose2D()):
    grid = OccupancyGrid.empty(res, n, n, origin)
    for r, c in cells:
        grid.occupancy[r, c] = OCCUPIED
        grid.cost[r, c] = COST_OCCUPIED
    return grid


def brute_force_cost(grid, inflation_radius):
    """Independent inflation reference: exhaustive min distance per cell."""
    occ = np.argwhere(grid.occupancy == OCCUPIED)
    out = np.zeros_like(grid.cost)
    for r in range(grid.height):
        for c in range(grid.width):
            if len(occ) == 0:
                continue
            d = np.min(np.hypot(occ[:, 0] - r, occ[:, 1] - c)) * grid.resolution
            scale = max(0.0, 1.0 - d / inflation_radius)
            out[r, c] = min(255, int(math.floor(scale * 255)))
    out[grid.occupancy == OCCUPIED] = COST_OCCUPIED
    return out


def uniform_scan(dist, beam_count=36, max_range=5.0):
    return LidarScan(-math.pi, math.pi, beam_count,
                     np.full(beam_count, float(dist)), max_range)


class TestInflate:
    def test_no_obstacles_all_zero(self):
        out = inflate(grid_with([]), 0.35)
        assert not out.cost.any()

    def test_single_cell_nonzero_support(self):
        # radius of 2 cells: strictly-inside cells get nonzero cost, the four
        # cells at exactly the radius land on the linear falloff's zero
        out = inflate(grid_with([(10, 10)]), 2 * 0.05)
        nz = np.argwhere(out.cost > 0)
        assert len(nz) == 9
        assert all(math.hypot(r - 10, c - 10) < 2.0 for r, c in nz)

    def test_boundary_cell_cost_zero(self):
        out = inflate(grid_with([(10, 10)]), 2 * 0.05)
        assert out.cost[10, 12] == 0

    def test_occupied_cells_keep_max_cost(self):
        out = inflate(grid_with([(3, 4), (15, 15)]), 0.35)
        assert out.cost[3, 4] == COST_OCCUPIED
        assert out.cost[15, 15] == COST_OCCUPIED

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            cells = [tuple(x) for x in rng.integers(0, 21, size=(6, 2))]
            grid = grid_with(cells)
            got = inflate(grid, 0.35)
            assert np.array_equal(got.cost, brute_force_cost(grid, 0.35))

    def test_monotone_under_added_obstacle(self):
        base = inflate(grid_with([(5, 5)]), 0.35).cost
        more = inflate(grid_with([(5, 5), (12, 12)]), 0.35).cost
        assert np.all(more.astype(int) >= base.astype(int))

    def test_does_not_mutate_input(self):
        grid = grid_with([(10, 10)])
        before = grid.cost.copy()
        inflate(grid, 0.35)
        assert np.array_equal(grid.cost, before)


class TestClearance:
    def test_empty_map_sentinel_max(self):
        assert clearance(grid_with([]), 0.5, 0.5) == math.inf

    def test_single_cell_distance(self):
        grid = grid_with([(10, 10)], res=1.0)   # center (10.5, 10.5)
        assert clearance(grid, 9.5, 10.5) == pytest.approx(1.0)

    def test_min_over_cells(self):
        grid = grid_with([(10, 11), (12, 10)], res=1.0)
        # centers (11.5, 10.5) and (10.5, 12.5); query (10.5, 10.5)
        assert clearance(grid, 10.5, 10.5) == pytest.approx(1.0)

    def test_outside_window_raises(self):
        with pytest.raises(ValueError):
            clearance(grid_with([]), 50.0, 0.0)

    def test_inflation_does_not_change_clearance(self):
        grid = grid_with([(4, 4), (16, 7)])
        assert clearance(inflate(grid, 0.35), 0.5, 0.5) == \
            clearance(grid, 0.5, 0.5)


class TestLocalCostmapUpdate:
    def make(self, **kw):
        return LocalCostmap(CostmapConfig(size=4.0, resolution=0.05, **kw))

    def test_all_max_range_no_occupied(self):
        cm = self.make()
        snap = cm.update(uniform_scan(5.0), Pose2D(0, 0, 0))
        assert not (snap.occupancy == OCCUPIED).any()

    def test_single_hit_ahead(self):
        cm = self.make()
        scan = LidarScan(-math.pi, math.pi, 4, np.array([5., 5., 5., 1.5]), 5.0)
        # angles() for 4 beams: -pi, -pi/2, 0, pi/2; beam 3 points along +y
        pose = Pose2D(0, 0, -math.pi / 2)    # beam 3 now points along +x
        snap = cm.update(scan, pose)
        r, c = snap.world_to_cell(1.5, 0.0)
        assert snap.occupancy[r, c] == OCCUPIED

    def test_free_marking_clears_old_hit(self):
        cm = self.make(decay=True)
        hit = LidarScan(-math.pi, math.pi, 4, np.array([5., 5., 5., 1.5]), 5.0)
        pose = Pose2D(0, 0, -math.pi / 2)
        snap = cm.update(hit, pose)
        r, c = snap.world_to_cell(1.5, 0.0)
        assert snap.occupancy[r, c] == OCCUPIED
        snap = cm.update(uniform_scan(5.0, beam_count=360), pose)
        assert snap.occupancy[r, c] == FREE

    def test_window_recenters_and_obstacle_stays_world_anchored(self):
        cm = self.make()
        scan = LidarScan(-math.pi, math.pi, 4, np.array([5., 5., 5., 1.5]), 5.0)
        pose = Pose2D(0, 0, -math.pi / 2)
        cm.update(scan, pose)
        # move 1 m; re-observe nothing (all max range) with decay off so the
        # old hit survives the scroll
        cm2 = self.make(decay=False)
        cm2.update(scan, pose)
        snap = cm2.update(uniform_scan(5.0), Pose2D(1.0, 0, 0))
        r, c = snap.world_to_cell(1.5, 0.0)
        assert snap.occupancy[r, c] == OCCUPIED
        # cells that scrolled in are unknown
        assert (snap.occupancy == UNKNOWN).any()

    def test_distance_field_matches_clearance_near_robot(self):
        cm = self.make()
        scan = LidarScan(-math.pi, math.pi, 8,
                         np.array([5., 5., 5., 5., 1.0, 5., 5., 5.]), 5.0)
        snap = cm.update(scan, Pose2D(0, 0, 0))
        assert snap.dist_field is not None
        r, c = snap.world_to_cell(0.0, 0.0)
        exact = clearance(snap, *snap.cell_to_world(r, c))
        assert snap.dist_field[r, c] == pytest.approx(exact, abs=1e-9)

    def test_serialize_schema_roundtrip(self):
        cm = self.make()
        cm.update(uniform_scan(1.0), Pose2D(0, 0, 0))
        payload = cm.serialize()
        assert set(payload) == {"width", "height", "resolution", "origin",
                                "data_b64"}
        data = base64.b64decode(payload["data_b64"])
        assert len(data) == payload["width"] * payload["height"]
        cost = np.frombuffer(data, dtype=np.uint8)
        assert cost.max() == COST_OCCUPIED


def test_config_validation():
    with pytest.raises(ValueError):
        CostmapConfig(resolution=0.0)
    with pytest.raises(ValueError):
        CostmapConfig(size=0.5, inflation_radius=0.35)
