"""Scenario and trace file formats (versioned JSON / JSON-lines).

A scenario bundles a config, a shape, and a script of timed change
commands.  A trace is one JSON record per line: a header, one record per
step, interleaved event records, and a final digest record whose hash
covers every preceding line, so identical runs produce identical files.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path as FsPath

from .agent import Phase
from .engine import SimConfig, World
from .lattice import GridSpec, Shape, validate_shape

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    pass


@dataclass
class Scenario:
    config: SimConfig
    shape: Shape
    script: list[dict] = field(default_factory=list)
    steps: int = 200

    def to_json(self) -> dict:
        cfg = self.config
        return {
            "schema_version": SCHEMA_VERSION,
            "config": {
                "robot_count": cfg.robot_count,
                "station_slots": cfg.station_slots,
                "initial_queue": cfg.initial_queue,
                "tau": cfg.tau,
                "charge_steps": cfg.charge_steps,
                "comm_rounds_per_step": cfg.comm_rounds_per_step,
                "edge_length": cfg.grid.edge_length,
                "waypoints_out": [list(w) for w in cfg.waypoints_out],
                "waypoints_in": [list(w) for w in cfg.waypoints_in],
                "seed": cfg.seed,
                "record_messages": cfg.record_messages,
            },
            "shape": {
                "boxes": sorted(list(b) for b in self.shape.boxes),
                "entry": list(self.shape.entry),
                "exit": list(self.shape.exit),
            },
            "script": self.script,
            "steps": self.steps,
        }

    def save(self, path) -> None:
        FsPath(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")


def load_scenario(path) -> Scenario:
    try:
        doc = json.loads(FsPath(path).read_text())
    except json.JSONDecodeError as e:
        raise ScenarioError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
    return scenario_from_json(doc)


def scenario_from_json(doc: dict) -> Scenario:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported schema_version {doc.get('schema_version')}")
    c = doc["config"]
    config = SimConfig(
        robot_count=c["robot_count"],
        station_slots=c["station_slots"],
        initial_queue=c.get("initial_queue"),
        tau=c.get("tau", 12.0),
        charge_steps=c.get("charge_steps", 10),
        comm_rounds_per_step=c.get("comm_rounds_per_step", 256),
        grid=GridSpec(edge_length=c.get("edge_length", 0.2)),
        waypoints_out=tuple(tuple(w) for w in c.get("waypoints_out", ())),
        waypoints_in=tuple(tuple(w) for w in c.get("waypoints_in", ())),
        seed=c.get("seed", 0),
        record_messages=c.get("record_messages", False),
    )
    s = doc["shape"]
    shape = validate_shape(
        {tuple(b) for b in s["boxes"]},
        entry=tuple(s["entry"]),
        exit=tuple(s["exit"]),
    )
    script = list(doc.get("script", []))
    for cmd in script:
        if cmd.get("op") not in ("add", "remove"):
            raise ScenarioError(f"unknown script op {cmd.get('op')!r}")
    steps = [c["step"] for c in script]
    if steps != sorted(steps):
        raise ScenarioError("script steps must be non-decreasing")
    total = doc.get("steps", 200)
    if steps and steps[-1] >= total:
        raise ScenarioError(
            f"script command at step {steps[-1]} never runs in {total} steps"
        )
    return Scenario(config=config, shape=shape, script=script, steps=total)


# --- trace ------------------------------------------------------------------


def _canon(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), sort_keys=True)


def path_digest(edges: dict) -> str:
    blob = _canon(sorted([list(a), list(b)] for a, b in edges.items()))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


class TraceWriter:
    """Streams trace records to memory and, optionally, a JSONL file."""

    def __init__(self, path=None):
        self.path = FsPath(path) if path is not None else None
        self.lines: list[str] = []
        self._fh = self.path.open("w") if self.path else None
        self._hash = hashlib.sha256()

    def _emit(self, rec: dict) -> None:
        line = _canon(rec)
        self.lines.append(line)
        self._hash.update(line.encode() + b"\n")
        if self._fh:
            self._fh.write(line + "\n")

    def header(self, world: World) -> None:
        cfg = world.config
        self._emit(
            {
                "kind": "header",
                "schema_version": SCHEMA_VERSION,
                "robot_count": cfg.robot_count,
                "station_slots": cfg.station_slots,
                "tau": cfg.tau,
                "shape": {
                    "boxes": sorted(list(b) for b in world.shape.boxes),
                    "entry": list(world.shape.entry),
                    "exit": list(world.shape.exit),
                },
            }
        )

    def event(self, rec: dict) -> None:
        body = {k: v for k, v in rec.items() if k != "kind"}
        self._emit({"kind": "event", "event": rec["kind"], **body})

    def message(self, step: int, mtype: str, to: int) -> None:
        self._emit({"kind": "message", "step": step, "type": mtype, "to": to})

    def step_record(self, world: World) -> None:
        robots = []
        for rid in sorted(world.robots):
            r = world.robots[rid]
            if r.phase is Phase.IN_SHAPE:
                pos = list(r.node)
            elif rid in world.travel:
                route, leg = world.travel[rid]
                pos = [route, leg]
            else:
                pos = None
            heading = None
            if r.planned_edge is not None:
                heading = [
                    r.planned_edge[1][0] - r.planned_edge[0][0],
                    r.planned_edge[1][1] - r.planned_edge[0][1],
                ]
            robots.append(
                {
                    "id": rid,
                    "phase": r.phase.value,
                    "role": r.role.value,
                    "pos": pos,
                    "heading": heading,
                    "held": r.held,
                }
            )
        active = world.active
        self._emit(
            {
                "kind": "step",
                "step": world.step_index,
                "robots": robots,
                "path": path_digest(world.effective_path_edges()),
                "shape_boxes": len(world.shape.boxes),
                "change": None
                if active is None
                else {"seq": active.seq, "status": active.status},
            }
        )

    def close(self) -> str:
        digest = self._hash.hexdigest()
        end = _canon({"kind": "end", "digest": digest})
        self.lines.append(end)
        if self._fh:
            self._fh.write(end + "\n")
            self._fh.close()
            self._fh = None
        return digest


def read_trace(path) -> list[dict]:
    records = []
    with FsPath(path).open() as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise ScenarioError(f"{path}:{lineno}:{e.colno}: {e.msg}") from e
    return records


def trace_digest(records: list[dict]) -> str | None:
    for rec in reversed(records):
        if rec.get("kind") == "end":
            return rec["digest"]
    return None


def run_scenario(scenario: Scenario, trace_path=None) -> tuple[World, TraceWriter]:
    """Execute a scenario deterministically; returns the world and trace."""
    writer = TraceWriter(trace_path)
    world = World(scenario.config, scenario.shape, trace_sink=writer)
    pending = list(scenario.script)
    for _ in range(scenario.steps):
        while pending and pending[0]["step"] <= world.step_index:
            cmd = pending.pop(0)
            world.inject_change(
                add=(cmd["op"] == "add"),
                box=tuple(cmd["box"]),
                method=cmd.get("method", "comm"),
            )
        world.step()
    writer.close()
    return world, writer
