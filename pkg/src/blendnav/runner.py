"""Simulation loop and headless experiment orchestration.

One tick (50 Hz): step obstacles -> sense from the true pose -> update the
odometry-frame costmap -> operator command on perceived state -> delay
buffer -> agent command -> blend (or manual bypass) -> clamp -> integrate
true pose and drifted odometry -> log -> termination check.
"""

from __future__ import annotations

import json
import math
import random
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .blend import BlendParams, BlendState, blend_step
from .costmap import CostmapConfig, LocalCostmap
from .delay import DelayBuffer
from .dwa import DwaConfig, plan_dwa
from .geometry import Pose2D, Twist2D, distance_to_goal
from .kinematics import KinematicLimits, RobotState, clamp_twist, \
    integrate_unicycle, update_odometry
from .operators import ScriptedOperator
from .stats import (Condition, DegenerateDataError, RunRecord,
                    TIMEOUT_SENTINEL, summarize_boxplot, wilcoxon_signed_rank)
from .world import (Scenario, ScanParams, WorldState, check_collision,
                    load_scenario, raycast_scan, scenario_path)

TICK_DT = 0.02   # 50 Hz control/physics tick

BASELINE_KEY = "bsc_delay0_drift0"


class PlanError(ValueError):
    """Experiment plan failed to parse or validate."""


class IntegrityError(RuntimeError):
    """Replay found a log whose recorded outputs do not match its inputs."""


@dataclass
class SimConfig:
    condition: Condition = field(default_factory=Condition)
    feedback_delay: float = 0.0
    collision_abort: bool = False
    collision_stop_time: float = 1.0
    # alternative drift model: a one-time odometry heading offset at t=0
    # instead of (or on top of) the per-tick rate bias
    drift_static_offset: float = 0.0
    tick_log: bool = True
    blend: BlendParams = field(default_factory=BlendParams)
    dwa: DwaConfig = field(default_factory=DwaConfig)
    costmap: CostmapConfig = field(default_factory=CostmapConfig)
    scan: ScanParams = field(default_factory=ScanParams)
    limits: KinematicLimits = field(default_factory=KinematicLimits)
    operator_lookahead: float = 0.8
    operator_reaction_delay: float = 0.25
    operator_noise_sd: float = 0.8
    operator_cruise: float = 1.0
    # live mode keeps sensing/planning on even under manual control (GUI feed)
    always_sense: bool = False


@dataclass
class TickResult:
    blend: BlendState
    applied: Twist2D
    status: str     # "running" | "goal" | "collision" | "timeout"


class Simulation:
    """Single deterministic run of one scenario under one condition."""

    def __init__(self, scenario: Scenario, config: SimConfig):
        self.scenario = scenario
        self.config = config
        self.world = WorldState(scenario)
        odom_start = scenario.start
        if config.drift_static_offset != 0.0:
            odom_start = Pose2D(odom_start.x, odom_start.y,
                                odom_start.theta + config.drift_static_offset
                                ).normalized()
        self.robot = RobotState(true_pose=scenario.start,
                                odom_pose=odom_start)
        self.delay_buffer = DelayBuffer(delay=config.condition.effective_delay())
        self.costmap = LocalCostmap(config.costmap)
        self.rng = random.Random(config.condition.seed)
        route = scenario.operator_route or [scenario.start, scenario.goal]
        self.operator = ScriptedOperator(
            waypoints=route,
            lookahead=config.operator_lookahead,
            reaction_delay=config.operator_reaction_delay,
            heading_noise_sd=config.operator_noise_sd,
            cruise_speed=config.operator_cruise,
            omega_max=config.limits.omega_max,
        )
        self._pose_history: deque = deque()
        self._stopped_until = -1.0
        self._was_colliding = False
        self.collision_count = 0
        self.min_alpha = math.inf
        self.max_alpha = -math.inf
        self.tick_count = 0
        self.tick_log: list[dict] = []
        self.status = "running"
        self.last_costmap = None
        self.last_blend: BlendState | None = None

    # --- one control tick ---

    def tick(self, live_user_cmd: Twist2D | None = None) -> TickResult:
        cfg = self.config
        cond = cfg.condition
        dt = TICK_DT
        now = self.robot.time

        if self.scenario.dynamic_obstacles:
            from .world import step_dynamic_obstacles
            step_dynamic_obstacles(self.world, dt)

        use_agent = cond.mode == "bsc" or cfg.always_sense
        if use_agent:
            scan = raycast_scan(self.world, self.robot.true_pose, cfg.scan)
            self.last_costmap = self.costmap.update(scan, self.robot.odom_pose)

        perceived = self._perceived_pose(now)
        if live_user_cmd is not None:
            user_raw = live_user_cmd
        else:
            user_raw = self.operator.step(perceived, now, self.rng)
        self.delay_buffer.push_command(user_raw, now)
        user = self.delay_buffer.sample_delayed(now)

        if use_agent:
            agent, _ = plan_dwa(self.robot, self.scenario.goal,
                                self.last_costmap, cfg.dwa)
        else:
            agent = Twist2D.zero()

        if cond.mode == "bsc":
            state = blend_step(user, agent, self.robot.odom_pose,
                               self.scenario.goal, cfg.blend,
                               self.last_blend.alpha if self.last_blend else None)
        else:
            state = BlendState(
                alpha=1.0,
                d=distance_to_goal(self.robot.odom_pose, self.scenario.goal),
                delta=0.0, user_cmd=user, agent_cmd=agent, blended_cmd=user)
        self.last_blend = state
        self.min_alpha = min(self.min_alpha, state.alpha)
        self.max_alpha = max(self.max_alpha, state.alpha)

        if now < self._stopped_until:
            applied = Twist2D.zero()
        else:
            applied = clamp_twist(state.blended_cmd, self.robot.current_twist,
                                  cfg.limits, dt)

        # walls are physical: a step into collision is a bump, not a pass-through
        candidate = integrate_unicycle(self.robot.true_pose, applied, dt) \
            if (applied.vx != 0.0 or applied.omega != 0.0) else self.robot.true_pose
        colliding = check_collision(self.world, candidate,
                                    self.scenario.robot_radius)
        status = "running"
        if colliding:
            applied = Twist2D.zero()
            candidate = self.robot.true_pose
            if not self._was_colliding:
                self.collision_count += 1
                self._stopped_until = now + cfg.collision_stop_time
                if cfg.collision_abort:
                    status = "collision"
        self._was_colliding = colliding

        self.robot.current_twist = applied
        self.robot.true_pose = candidate
        self.robot.odom_pose = update_odometry(self.robot.odom_pose, applied,
                                               dt, cond.drift)
        self.robot.time = now + dt
        self.tick_count += 1

        if cfg.tick_log:
            self.tick_log.append({
                "t": self.robot.time,
                "true": [self.robot.true_pose.x, self.robot.true_pose.y,
                         self.robot.true_pose.theta],
                "odom": [self.robot.odom_pose.x, self.robot.odom_pose.y,
                         self.robot.odom_pose.theta],
                "user": [user_raw.vx, user_raw.omega],
                "du": [user.vx, user.omega],
                "agent": [agent.vx, agent.omega],
                "alpha": state.alpha,
                "d": state.d,
                "delta": state.delta,
                "blended": [state.blended_cmd.vx, state.blended_cmd.omega],
                "applied": [applied.vx, applied.omega],
                "col": self.collision_count,
            })

        if status == "running":
            if distance_to_goal(self.robot.true_pose, self.scenario.goal) \
                    <= self.scenario.goal_tolerance:
                status = "goal"
            elif self.robot.time >= self.scenario.timeout:
                status = "timeout"
        self.status = status
        return TickResult(state, applied, status)

    def _perceived_pose(self, now: float) -> Pose2D:
        """Odometry pose, optionally lagged by the feedback delay."""
        self._pose_history.append((now, self.robot.odom_pose))
        cutoff = now - self.config.feedback_delay
        while len(self._pose_history) > 1 and self._pose_history[1][0] <= cutoff:
            self._pose_history.popleft()
        return self._pose_history[0][1]

    # --- full run ---

    def run(self) -> RunRecord:
        start = self.scenario.start
        true_path = [start]
        odom_path = [start]
        while True:
            result = self.tick()
            true_path.append(self.robot.true_pose)
            odom_path.append(self.robot.odom_pose)
            if result.status != "running":
                break
        return self.finalize(true_path, odom_path)

    def finalize(self, true_path: list[Pose2D],
                 odom_path: list[Pose2D]) -> RunRecord:
        from .stats import path_length
        completed = self.status == "goal"
        return RunRecord(
            scenario=self.scenario.name,
            condition=self.config.condition,
            completed=completed,
            time_to_completion=self.robot.time if completed else TIMEOUT_SENTINEL,
            odometric_distance=path_length(odom_path),
            true_distance=path_length(true_path),
            collision_count=self.collision_count,
            min_alpha=self.min_alpha if self.min_alpha != math.inf else 1.0,
            max_alpha=self.max_alpha if self.max_alpha != -math.inf else 1.0,
            ticks=self.tick_count,
        )


# ---------------------------------------------------------------------------
# experiment plans

@dataclass
class ExperimentPlan:
    scenario: str
    conditions: list[Condition]
    seeds: list[int]
    order_seed: int = 0
    tick_log: bool = True
    feedback_delay: float = 0.0
    operator_noise_sd: float = 0.8
    operator_reaction_delay: float = 0.25

    def __post_init__(self):
        if not self.conditions:
            raise PlanError("plan needs at least one condition")
        if len(set(self.seeds)) != len(self.seeds):
            raise PlanError("seeds must be distinct")


def load_plan(source) -> ExperimentPlan:
    if isinstance(source, (str, Path)):
        try:
            cfg = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise PlanError(f"cannot load plan: {exc}") from exc
    else:
        cfg = dict(source)
    try:
        conditions = [Condition(mode=c.get("mode", "bsc"),
                                delay=float(c.get("delay", 0.0)),
                                drift=float(c.get("drift", 0.0)),
                                delay_range=tuple(map(float, c["delay_range"]))
                                if c.get("delay_range") else None)
                      for c in cfg["conditions"]]
        if "seeds" in cfg:
            seeds = [int(s) for s in cfg["seeds"]]
        else:
            seeds = list(range(int(cfg.get("repetitions", 12))))
        return ExperimentPlan(
            scenario=cfg["scenario"],
            conditions=conditions,
            seeds=seeds,
            order_seed=int(cfg.get("order_seed", 0)),
            tick_log=bool(cfg.get("tick_log", True)),
            feedback_delay=float(cfg.get("feedback_delay", 0.0)),
            operator_noise_sd=float(cfg.get("operator_noise_sd", 0.8)),
            operator_reaction_delay=float(cfg.get("operator_reaction_delay", 0.25)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, PlanError):
            raise
        raise PlanError(f"invalid plan: {exc}") from exc


def _cell_config(plan: ExperimentPlan, condition: Condition) -> SimConfig:
    return SimConfig(condition=condition,
                     feedback_delay=plan.feedback_delay,
                     tick_log=plan.tick_log,
                     operator_noise_sd=plan.operator_noise_sd,
                     operator_reaction_delay=plan.operator_reaction_delay)


def run_cell(plan: ExperimentPlan, condition: Condition,
             out_dir: Path | None = None) -> RunRecord:
    """Run one (condition, seed) cell; optionally write its tick log."""
    scenario = load_scenario(scenario_path(plan.scenario))
    sim = Simulation(scenario, _cell_config(plan, condition))
    record = sim.run()
    if out_dir is not None:
        write_run_log(out_dir, scenario, record, sim.tick_log)
    return record


def _run_cell_worker(args) -> dict:
    plan_dict, cond_dict, out_dir = args
    plan = load_plan(plan_dict)
    if cond_dict.get("delay_range"):
        cond_dict["delay_range"] = tuple(cond_dict["delay_range"])
    cond = Condition(**cond_dict)
    record = run_cell(plan, cond, Path(out_dir) if out_dir else None)
    return record.to_dict()


def run_experiment(plan: ExperimentPlan, out_dir: Path,
                   parallel: int = 1) -> list[RunRecord]:
    """Execute every (condition x seed) cell in randomized order and write
    run logs, the record table, and the analysis report."""
    out_dir = Path(out_dir)
    (out_dir / "runs").mkdir(parents=True, exist_ok=True)

    cells = [replace(cond, seed=seed)
             for cond in plan.conditions for seed in plan.seeds]
    random.Random(plan.order_seed).shuffle(cells)

    if parallel > 1:
        plan_dict = _plan_to_dict(plan)
        args = [(plan_dict, _cond_to_dict(c), str(out_dir)) for c in cells]
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            records = [RunRecord.from_dict(d)
                       for d in pool.map(_run_cell_worker, args)]
    else:
        records = [run_cell(plan, cond, out_dir) for cond in cells]

    records.sort(key=lambda r: (r.condition.key(), r.condition.seed))
    with open(out_dir / "records.jsonl", "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")
    write_report(records, out_dir)
    return records


def _plan_to_dict(plan: ExperimentPlan) -> dict:
    return {
        "scenario": plan.scenario,
        "conditions": [_cond_to_dict(c) for c in plan.conditions],
        "seeds": plan.seeds,
        "order_seed": plan.order_seed,
        "tick_log": plan.tick_log,
        "feedback_delay": plan.feedback_delay,
        "operator_noise_sd": plan.operator_noise_sd,
        "operator_reaction_delay": plan.operator_reaction_delay,
    }


def _cond_to_dict(c: Condition) -> dict:
    return {"mode": c.mode, "delay": c.delay, "drift": c.drift, "seed": c.seed,
            "delay_range": list(c.delay_range) if c.delay_range else None}


# ---------------------------------------------------------------------------
# run logs and replay

def run_log_name(record: RunRecord) -> str:
    return f"{record.condition.key()}_seed{record.condition.seed}.jsonl"


def write_run_log(out_dir: Path, scenario: Scenario, record: RunRecord,
                  ticks: list[dict]) -> Path:
    path = Path(out_dir) / "runs" / run_log_name(record)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        "type": "meta",
        "scenario": scenario.name,
        "start": [scenario.start.x, scenario.start.y, scenario.start.theta],
        "goal": [scenario.goal.x, scenario.goal.y],
        "mode": record.condition.mode,
        "delay": record.condition.delay,
        "drift": record.condition.drift,
        "seed": record.condition.seed,
        "blend_d0": BlendParams().d0,
        "blend_delta0": BlendParams().delta0,
        "blend_mode": BlendParams().mode,
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(meta, sort_keys=True) + "\n")
        for t in ticks:
            fh.write(json.dumps({"type": "tick", **t}, sort_keys=True) + "\n")
        fh.write(json.dumps({"type": "result", **record.to_dict()},
                            sort_keys=True) + "\n")
    return path


def replay(log_path: Path) -> int:
    """Re-derive every logged blend output from its logged inputs.

    Returns the number of verified ticks; raises IntegrityError at the first
    tick whose recorded alpha or blended command does not reproduce exactly.
    """
    lines = [json.loads(line) for line in Path(log_path).read_text().splitlines()]
    if not lines or lines[0].get("type") != "meta":
        raise IntegrityError(f"{log_path}: missing meta header")
    meta = lines[0]
    params = BlendParams(d0=meta["blend_d0"], delta0=meta["blend_delta0"],
                         mode=meta["blend_mode"])
    goal = Pose2D(meta["goal"][0], meta["goal"][1])
    prev_odom = Pose2D(*meta["start"])
    verified = 0
    for i, entry in enumerate(lines[1:], start=1):
        if entry.get("type") != "tick":
            continue
        user = Twist2D(entry["du"][0], 0.0, entry["du"][1])
        agent = Twist2D(entry["agent"][0], 0.0, entry["agent"][1])
        if meta["mode"] == "bsc":
            state = blend_step(user, agent, prev_odom, goal, params)
            expect_alpha = state.alpha
            expect_cmd = [state.blended_cmd.vx, state.blended_cmd.omega]
            expect_d = state.d
        else:
            expect_alpha = 1.0
            expect_cmd = entry["du"]
            expect_d = distance_to_goal(prev_odom, goal)
        if entry["alpha"] != expect_alpha or entry["blended"] != expect_cmd \
                or entry["d"] != expect_d:
            raise IntegrityError(
                f"{log_path}: divergence at tick {i} "
                f"(alpha {entry['alpha']!r} vs {expect_alpha!r})")
        prev_odom = Pose2D(*entry["odom"])
        verified += 1
    return verified


# ---------------------------------------------------------------------------
# analysis

def _paired(records: list[RunRecord], key_a: str, key_b: str,
            metric: str) -> tuple[list[float], list[float], int]:
    """Completion-paired samples by seed; timeout pairs dropped together."""
    by_key: dict[str, dict[int, RunRecord]] = {}
    for rec in records:
        by_key.setdefault(rec.condition.key(), {})[rec.condition.seed] = rec
    a_map = by_key.get(key_a, {})
    b_map = by_key.get(key_b, {})
    a_vals, b_vals, dropped = [], [], 0
    for seed in sorted(set(a_map) & set(b_map)):
        ra, rb = a_map[seed], b_map[seed]
        if not (ra.completed and rb.completed):
            dropped += 1
            continue
        a_vals.append(getattr(ra, metric))
        b_vals.append(getattr(rb, metric))
    return a_vals, b_vals, dropped


def analyze(records: list[RunRecord]) -> dict:
    """Wilcoxon comparisons against the no-disturbance BSC baseline, plus
    per-condition boxplot summaries."""
    keys = sorted({r.condition.key() for r in records})
    comparisons = []
    for key in keys:
        if key == BASELINE_KEY:
            continue
        for metric in ("time_to_completion", "odometric_distance"):
            a, b, dropped = _paired(records, key, BASELINE_KEY, metric)
            row = {"condition": key, "metric": metric, "n_pairs": len(a),
                   "n_dropped": dropped, "p_vs_baseline": None,
                   "method": None, "median": _median_or_none(a)}
            if len(a) >= 2:
                try:
                    res = wilcoxon_signed_rank(a, b)
                    row["p_vs_baseline"] = res.p_two_sided
                    row["method"] = res.method
                except DegenerateDataError:
                    row["method"] = "degenerate"
            comparisons.append(row)

    boxplots = []
    for key in keys:
        for metric in ("time_to_completion", "odometric_distance",
                       "true_distance"):
            vals = [getattr(r, metric) for r in records
                    if r.condition.key() == key
                    and (metric != "time_to_completion" or r.completed)]
            if vals:
                boxplots.append({"condition": key, "metric": metric,
                                 "n": len(vals), **summarize_boxplot(vals)})

    completions = {key: sum(1 for r in records
                            if r.condition.key() == key and r.completed)
                   for key in keys}
    collisions = {key: sum(r.collision_count for r in records
                           if r.condition.key() == key)
                  for key in keys}
    return {"comparisons": comparisons, "boxplots": boxplots,
            "completions": completions, "collisions": collisions}


def _median_or_none(vals: list[float]):
    if not vals:
        return None
    arr = sorted(vals)
    n = len(arr)
    mid = n // 2
    return arr[mid] if n % 2 else (arr[mid - 1] + arr[mid]) / 2.0


def write_report(records: list[RunRecord], out_dir: Path) -> dict:
    report = analyze(records)
    out_dir = Path(out_dir)
    with open(out_dir / "report.csv", "w") as fh:
        fh.write("condition,metric,n_pairs,n_dropped,median,p_vs_baseline,method\n")
        for row in report["comparisons"]:
            fh.write("{condition},{metric},{n_pairs},{n_dropped},"
                     "{median},{p_vs_baseline},{method}\n".format(
                         **{k: ("" if v is None else v) for k, v in row.items()}))
    with open(out_dir / "boxplots.csv", "w") as fh:
        fh.write("condition,metric,n,min,q1,median,q3,max,outliers\n")
        for row in report["boxplots"]:
            outliers = "|".join(repr(x) for x in row["outliers"])
            fh.write(f"{row['condition']},{row['metric']},{row['n']},"
                     f"{row['min']},{row['q1']},{row['median']},{row['q3']},"
                     f"{row['max']},{outliers}\n")
    with open(out_dir / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    return report


def load_records(path: Path) -> list[RunRecord]:
    return [RunRecord.from_dict(json.loads(line))
            for line in Path(path).read_text().splitlines() if line.strip()]
