"""Command line entry points: run, check, oracle, render, serve."""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path as FsPath

import click

from ..lattice import ShapeError, validate_shape
from ..planner import reference_path
from ..scenario import (
    ScenarioError,
    load_scenario,
    read_trace,
    run_scenario,
)
from ..verify import MalformedTrace, check_trace

ALL_CHECKS = ("occupancy", "travel_separation", "liveness", "cadence", "change_resolution")


@click.group()
def main():
    """Swarm shape formation: simulate, verify, and serve."""


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(exists=True))
@click.option("--trace", "trace_path", required=True, type=click.Path())
@click.option("--steps", type=int, default=None, help="override scenario step count")
@click.option("--seed", type=int, default=None, envvar="SWARMSCULPT_SEED")
@click.option("--method", type=click.Choice(["comm", "movement"]), default=None,
              help="override the secondary-change method of every scripted change")
def run(scenario_path, trace_path, steps, seed, method):
    """Run a scenario deterministically and write its trace."""
    try:
        scenario = load_scenario(scenario_path)
    except (ScenarioError, ShapeError) as e:
        raise click.ClickException(str(e))
    if steps is not None:
        scenario.steps = steps
    if seed is not None:
        scenario.config.seed = seed
    if method is not None:
        for cmd in scenario.script:
            cmd["method"] = method
    world, writer = run_scenario(scenario, trace_path)
    digest = writer.close()
    click.echo(f"wrote {trace_path} ({world.step_index} steps, digest {digest[:16]})")


@main.command()
@click.option("--trace", "trace_path", required=True, type=click.Path(exists=True))
@click.option("--checks", default=",".join(ALL_CHECKS),
              help="comma-separated subset of: " + ", ".join(ALL_CHECKS))
def check(trace_path, checks):
    """Run trace-level checks; nonzero exit if any fails."""
    wanted = [c.strip() for c in checks.split(",") if c.strip()]
    unknown = set(wanted) - set(ALL_CHECKS)
    if unknown:
        raise click.ClickException(f"unknown checks: {sorted(unknown)}")
    try:
        reports = check_trace(read_trace(trace_path))
    except (MalformedTrace, ScenarioError) as e:
        raise click.ClickException(str(e))
    failed = False
    for rep in reports:
        if rep.check_name not in wanted:
            continue
        mark = "PASS" if rep.passed else "FAIL"
        detail = "" if rep.passed else f"  {rep.counterexample}"
        click.echo(f"[{mark}] {rep.check_name}{detail}")
        failed |= not rep.passed
    sys.exit(1 if failed else 0)


@main.command()
@click.option("--shape-file", type=click.Path(exists=True), default=None,
              help='JSON {"boxes": [[i,j],...], "entry": [x,y], "exit": [x,y]}')
@click.option("--boxes", default=None, help='e.g. "0,0;1,0;0,1"')
@click.option("--entry", default=None, help='e.g. "0,0"')
@click.option("--exit", "exit_", default=None, help='e.g. "1,0"')
@click.option("-o", "--out", type=click.Path(), default=None)
def oracle(shape_file, boxes, entry, exit_, out):
    """Print the canonical path for a shape as a JSON document."""
    if shape_file:
        doc = json.loads(FsPath(shape_file).read_text())
        box_set = {tuple(b) for b in doc["boxes"]}
        entry_node = tuple(doc["entry"])
        exit_node = tuple(doc["exit"])
    elif boxes and entry and exit_:
        box_set = {tuple(map(int, b.split(","))) for b in boxes.split(";")}
        entry_node = tuple(map(int, entry.split(",")))
        exit_node = tuple(map(int, exit_.split(",")))
    else:
        raise click.ClickException("provide --shape-file or --boxes/--entry/--exit")
    try:
        shape = validate_shape(box_set, entry=entry_node, exit=exit_node)
    except ShapeError as e:
        raise click.ClickException(str(e))
    path = reference_path(shape)
    doc = {
        "schema_version": 1,
        "entry": list(shape.entry),
        "exit": list(shape.exit),
        "sequence": [list(n) for n in path.to_sequence()],
        "edges": sorted([list(a), list(b)] for a, b in path.edges.items()),
    }
    text = json.dumps(doc, indent=2)
    if out:
        FsPath(out).write_text(text + "\n")
        click.echo(f"wrote {out}")
    else:
        click.echo(text)


@main.command()
@click.option("--trace", "trace_path", required=True, type=click.Path(exists=True))
@click.option("--render-step", "step", required=True, type=int)
@click.option("-o", "--out", required=True, type=click.Path())
def render(trace_path, step, out):
    """Draw one trace step as an SVG."""
    from .render import build_render_model, draw_svg

    try:
        model = build_render_model(read_trace(trace_path), step)
    except (ScenarioError, ValueError) as e:
        raise click.ClickException(str(e))
    draw_svg(model, out)
    click.echo(f"wrote {out}")


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(exists=True))
@click.option("--port", type=int, default=8000, envvar="SWARMSCULPT_PORT")
@click.option("--host", default="127.0.0.1")
@click.option("--ui", "ui_dir", type=click.Path(exists=True, file_okay=False),
              default=None, help="also serve a built web client from this directory")
def serve(scenario_path, port, host, ui_dir):
    """Serve a live sculpting session over the WebSocket protocol."""
    import uvicorn

    from .server import create_app

    try:
        scenario = load_scenario(scenario_path)
    except (ScenarioError, ShapeError) as e:
        raise click.ClickException(str(e))
    app = create_app(scenario, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
