"""Live bridge: one engine per session, exposed over a WebSocket protocol.

Server messages: a full ``snapshot`` on connect (or on request), then one
``step`` diff per simulated step; rejected commands come back as ``error``
records with the engine's rejection codes.  Client commands are queued and
applied only at step boundaries, so the engine stays single-writer and a
session's command log replays byte-identically through the scenario runner.
"""

from __future__ import annotations

import asyncio
import json
from dataclasses import dataclass, field

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from ..agent import Phase
from ..engine import ChangeRejected, World
from ..scenario import SCHEMA_VERSION, Scenario, TraceWriter

PROTOCOL_COMMANDS = {
    "add_box", "remove_box", "pause", "resume", "set_speed",
    "select_method", "snapshot", "tick",
}


@dataclass
class Session:
    scenario: Scenario
    world: World = None
    trace: TraceWriter = None
    method: str = "comm"
    paused: bool = True
    speed: float = 4.0  # simulated steps per wall second
    command_log: list[dict] = field(default_factory=list)
    _event_mark: int = 0

    def __post_init__(self):
        self.trace = TraceWriter()
        self.world = World(self.scenario.config, self.scenario.shape, self.trace)

    def drain_status_events(self) -> list[dict]:
        """Change-status transitions since the last message, oldest first.

        Propagating lives inside a single injection, so without this stream
        a client would only ever see the ladder from 'primary' onward.
        """
        fresh = self.world.events[self._event_mark:]
        self._event_mark = len(self.world.events)
        return [
            {"seq": e["seq"], "status": e["status"], "step": e["step"]}
            for e in fresh
            if e["kind"] == "change_status"
        ]

    # -- state serialization --------------------------------------------------

    def robot_records(self) -> list[dict]:
        out = []
        for rid in sorted(self.world.robots):
            r = self.world.robots[rid]
            rec = {"id": rid, "phase": r.phase.value, "role": r.role.value}
            if r.phase is Phase.IN_SHAPE:
                rec["pos"] = list(r.node)
                rec["heading"] = (
                    None
                    if r.planned_edge is None
                    else [
                        r.planned_edge[1][0] - r.planned_edge[0][0],
                        r.planned_edge[1][1] - r.planned_edge[0][1],
                    ]
                )
            elif rid in self.world.travel:
                rec["leg"] = list(self.world.travel[rid])
            out.append(rec)
        return out

    def hints(self) -> dict:
        addable, removable = self.world.eligible_boxes()
        return {
            "addable": [list(b) for b in addable],
            "removable": [list(b) for b in removable],
            "changeable": self.world.changeable(),
        }

    def change_state(self):
        a = self.world.active
        return None if a is None else {"seq": a.seq, "status": a.status}

    def snapshot(self) -> dict:
        return {
            "type": "snapshot",
            "schema_version": SCHEMA_VERSION,
            "step": self.world.step_index,
            "shape": {
                "boxes": sorted(list(b) for b in self.world.shape.boxes),
                "entry": list(self.world.shape.entry),
                "exit": list(self.world.shape.exit),
            },
            "robots": self.robot_records(),
            "hints": self.hints(),
            "change": self.change_state(),
            "status_events": self.drain_status_events(),
            "paused": self.paused,
            "speed": self.speed,
            "method": self.method,
        }

    def step_diff(self) -> dict:
        return {
            "type": "step",
            "step": self.world.step_index,
            "shape_boxes": sorted(list(b) for b in self.world.shape.boxes),
            "robots": self.robot_records(),
            "hints": self.hints(),
            "change": self.change_state(),
            "status_events": self.drain_status_events(),
        }

    # -- command application ----------------------------------------------------

    def apply(self, cmd: dict) -> dict | None:
        """Apply one client command at a step boundary; returns an error
        record when the engine rejects it."""
        t = cmd["type"]
        if t in ("add_box", "remove_box"):
            box = (int(cmd["i"]), int(cmd["j"]))
            try:
                self.world.inject_change(
                    add=(t == "add_box"), box=box, method=self.method
                )
                self.command_log.append(
                    {
                        "step": self.world.step_index,
                        "op": "add" if t == "add_box" else "remove",
                        "box": list(box),
                        "method": self.method,
                    }
                )
            except ChangeRejected as e:
                return {"type": "error", "code": e.code, "message": str(e)}
        elif t == "pause":
            self.paused = True
        elif t == "resume":
            self.paused = False
        elif t == "set_speed":
            self.speed = max(0.1, min(100.0, float(cmd["steps_per_second"])))
        elif t == "select_method":
            method = cmd["method"]
            if method not in ("comm", "movement"):
                return {"type": "error", "code": "BadMethod", "message": method}
            self.method = method
        return None

    def replay_scenario(self) -> Scenario:
        """The session as a headless scenario: same config, shape, and log."""
        return Scenario(
            config=self.scenario.config,
            shape=self.scenario.shape,
            script=list(self.command_log),
            steps=self.world.step_index,
        )


def create_app(scenario: Scenario, ui_dir=None) -> FastAPI:
    app = FastAPI()
    session = Session(scenario)
    app.state.session = session

    @app.get("/healthz")
    def health():
        return {"ok": True, "step": session.world.step_index}

    @app.get("/command-log")
    def command_log():
        return {"script": session.command_log, "steps": session.world.step_index}

    @app.websocket("/ws")
    async def ws(socket: WebSocket):
        await socket.accept()
        await socket.send_json(session.snapshot())
        ticker_task = asyncio.create_task(_ticker(session, socket))
        try:
            while True:
                raw = await socket.receive_text()
                try:
                    cmd = json.loads(raw)
                except json.JSONDecodeError:
                    await socket.send_json(
                        {"type": "bye", "reason": "MalformedCommand"}
                    )
                    break
                if cmd.get("type") not in PROTOCOL_COMMANDS:
                    await socket.send_json(
                        {"type": "bye", "reason": "UnknownCommand"}
                    )
                    break
                if cmd["type"] == "snapshot":
                    await socket.send_json(session.snapshot())
                    continue
                if cmd["type"] == "tick":
                    if session.paused:
                        session.world.step()
                        await socket.send_json(session.step_diff())
                    continue
                err = session.apply(cmd)
                if err is not None:
                    await socket.send_json(err)
                else:
                    await socket.send_json(session.snapshot())
        except WebSocketDisconnect:
            pass
        finally:
            ticker_task.cancel()

    if ui_dir is not None:
        from starlette.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


async def _ticker(session: Session, socket: WebSocket):
    while True:
        await asyncio.sleep(1.0 / session.speed)
        if not session.paused:
            session.world.step()
            await socket.send_json(session.step_diff())
