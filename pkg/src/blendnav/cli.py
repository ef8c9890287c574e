"""Command-line entry points: batch runs, analysis, replay, live serving."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import runner
from .world import ScenarioError, load_scenario, scenario_path

EXIT_PLAN_ERROR = 2
EXIT_INTEGRITY = 3


@click.group()
def main():
    """Blended shared-control simulator and experiment harness."""


@main.command("run")
@click.option("--plan", "plan_file", required=True, type=click.Path(exists=True))
@click.option("--parallel", default=1, show_default=True)
@click.option("--out", "out_dir", default="results", show_default=True,
              type=click.Path())
def run_command(plan_file, parallel, out_dir):
    """Execute an experiment plan headlessly."""
    try:
        plan = runner.load_plan(plan_file)
    except runner.PlanError as exc:
        click.echo(f"plan error: {exc}", err=True)
        sys.exit(EXIT_PLAN_ERROR)
    records = runner.run_experiment(plan, Path(out_dir), parallel=parallel)
    completed = sum(1 for r in records if r.completed)
    click.echo(f"{len(records)} runs ({completed} completed) -> {out_dir}")


@main.command("analyze")
@click.option("--logs", "logs_dir", required=True, type=click.Path(exists=True))
def analyze_command(logs_dir):
    """Recompute the statistical report from a results directory."""
    records_file = Path(logs_dir) / "records.jsonl"
    if not records_file.exists():
        click.echo(f"no records.jsonl under {logs_dir}", err=True)
        sys.exit(EXIT_PLAN_ERROR)
    records = runner.load_records(records_file)
    report = runner.write_report(records, Path(logs_dir))
    for row in report["comparisons"]:
        if row["metric"] == "time_to_completion":
            click.echo(f"{row['condition']}: n={row['n_pairs']} "
                       f"p={row['p_vs_baseline']} ({row['method']})")


@main.command("replay")
@click.option("--log", "log_file", required=True, type=click.Path(exists=True))
def replay_command(log_file):
    """Verify a run log's recorded outputs against its recorded inputs."""
    try:
        n = runner.replay(Path(log_file))
    except runner.IntegrityError as exc:
        click.echo(f"integrity failure: {exc}", err=True)
        sys.exit(EXIT_INTEGRITY)
    click.echo(f"replay ok: {n} ticks verified")


@main.command("serve")
@click.option("--scenario", "scenario_name", default="doorway", show_default=True)
@click.option("--port", default=8732, show_default=True)
@click.option("--mode", default="bsc", type=click.Choice(["manual", "bsc"]),
              show_default=True)
@click.option("--delay", default=0.0, show_default=True)
@click.option("--drift", default=0.0, show_default=True)
@click.option("--feedback-delay", default=0.0, show_default=True)
@click.option("--time-scale", default=1.0, show_default=True,
              help="Run the sim clock faster (>1) or slower than wall time.")
def serve_command(scenario_name, port, mode, delay, drift, feedback_delay,
                  time_scale):
    """Serve the live teleoperation bridge and operator console."""
    import uvicorn
    from .bridge import BridgeSettings, create_app
    try:
        scenario = load_scenario(scenario_path(scenario_name))
    except ScenarioError as exc:
        click.echo(f"scenario error: {exc}", err=True)
        sys.exit(EXIT_PLAN_ERROR)
    settings = BridgeSettings(mode=mode, delay=delay, drift=drift,
                              feedback_delay=feedback_delay,
                              time_scale=time_scale)
    app = create_app(scenario, settings)
    uvicorn.run(app, host="0.0.0.0", port=port, log_level="warning")


if __name__ == "__main__":
    main()
