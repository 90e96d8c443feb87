import json

import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from swarmsculpt.scenario import read_trace, run_scenario, scenario_from_json
from swarmsculpt.shell.cli import main
from swarmsculpt.shell.render import build_render_model
from swarmsculpt.shell.server import create_app


def square_scenario_doc(steps=60, script=None):
    return {
        "schema_version": 1,
        "config": {"robot_count": 34, "station_slots": 18, "charge_steps": 1},
        "shape": {
            "boxes": [[0, 0], [0, 1], [1, 0], [1, 1]],
            "entry": [0, 0],
            "exit": [1, 0],
        },
        "script": script
        if script is not None
        else [{"step": 30, "op": "remove", "box": [1, 1], "method": "comm"}],
        "steps": steps,
    }


@pytest.fixture()
def scenario_file(tmp_path):
    p = tmp_path / "scenario.json"
    p.write_text(json.dumps(square_scenario_doc()))
    return p


def test_cli_run_and_check(tmp_path, scenario_file):
    runner = CliRunner()
    trace = tmp_path / "out.jsonl"
    res = runner.invoke(
        main, ["run", "--scenario", str(scenario_file), "--trace", str(trace)]
    )
    assert res.exit_code == 0, res.output
    res = runner.invoke(main, ["check", "--trace", str(trace)])
    assert res.exit_code == 0, res.output
    assert res.output.count("[PASS]") == 5


def test_cli_check_fails_on_corruption(tmp_path, scenario_file):
    runner = CliRunner()
    trace = tmp_path / "out.jsonl"
    runner.invoke(main, ["run", "--scenario", str(scenario_file), "--trace", str(trace)])
    lines = trace.read_text().splitlines()
    doctored = []
    for line in lines:
        rec = json.loads(line)
        if rec.get("kind") == "step" and rec["step"] == 45:
            in_shape = [r for r in rec["robots"] if r["phase"] == "in_shape"]
            in_shape[1]["pos"] = in_shape[0]["pos"]
        doctored.append(json.dumps(rec))
    trace.write_text("\n".join(doctored) + "\n")
    res = runner.invoke(main, ["check", "--trace", str(trace), "--checks", "occupancy"])
    assert res.exit_code == 1
    assert "[FAIL] occupancy" in res.output


def test_cli_oracle_unit(tmp_path):
    runner = CliRunner()
    res = runner.invoke(
        main, ["oracle", "--boxes", "0,0", "--entry", "0,0", "--exit", "1,0"]
    )
    assert res.exit_code == 0, res.output
    doc = json.loads(res.output)
    assert doc["sequence"] == [[0, 0], [0, 1], [1, 1], [1, 0]]
    assert len(doc["edges"]) == 3


def test_cli_oracle_rejects_invalid():
    runner = CliRunner()
    res = runner.invoke(
        main, ["oracle", "--boxes", "0,0;1,1", "--entry", "0,0", "--exit", "1,0"]
    )
    assert res.exit_code != 0
    assert "DisconnectedBoxes" in res.output


def test_render_model_and_svg(tmp_path, scenario_file):
    runner = CliRunner()
    trace = tmp_path / "out.jsonl"
    runner.invoke(main, ["run", "--scenario", str(scenario_file), "--trace", str(trace)])
    records = read_trace(trace)
    model = build_render_model(records, 20)
    assert len(model["boxes"]) == 4
    assert len(model["nodes"]) == 16
    # steady state: every node is occupied and all but the exit point onward
    assert len(model["robots"]) == 16
    assert len(model["arrows"]) == 15
    # arrow set matches the canonical square path topology
    from swarmsculpt.planner import reference_path
    from swarmsculpt.lattice import validate_shape

    square = validate_shape(
        {(0, 0), (0, 1), (1, 0), (1, 1)}, entry=(0, 0), exit=(1, 0)
    )
    want = {
        (a, (b[0] - a[0], b[1] - a[1]))
        for a, b in reference_path(square).edges.items()
    }
    got = {(a["from"], a["dir"]) for a in model["arrows"]}
    assert got == want
    out = tmp_path / "step20.svg"
    res = runner.invoke(
        main,
        ["render", "--trace", str(trace), "--render-step", "20", "-o", str(out)],
    )
    assert res.exit_code == 0, res.output
    assert out.read_text().startswith("<?xml")
    # post-change render reflects the shrunken shape
    model2 = build_render_model(records, 50)
    assert len(model2["boxes"]) == 3


# --- serve ---------------------------------------------------------------------


def make_session_client(steps_before=40):
    scenario = scenario_from_json(square_scenario_doc(script=[], steps=10))
    app = create_app(scenario)
    client = TestClient(app)
    return app, client


def drain_until(ws, type_, limit=50):
    for _ in range(limit):
        msg = ws.receive_json()
        if msg["type"] == type_:
            return msg
    raise AssertionError(f"no {type_} message")


def test_serve_session_lifecycle_and_replay():
    app, client = make_session_client()
    with client.websocket_connect("/ws") as ws:
        snap = ws.receive_json()
        assert snap["type"] == "snapshot" and snap["step"] == 0
        # march to a steady state with manual ticks (session starts paused)
        for _ in range(40):
            ws.send_text(json.dumps({"type": "tick"}))
            msg = ws.receive_json()
            assert msg["type"] == "step"
        ws.send_text(json.dumps({"type": "snapshot"}))
        snap = ws.receive_json()
        assert snap["hints"]["changeable"]
        assert [1, 1] in snap["hints"]["removable"]

        # a legal removal: the full status ladder streams to the client
        ws.send_text(json.dumps({"type": "remove_box", "i": 1, "j": 1}))
        snap = ws.receive_json()
        assert snap["type"] == "snapshot"
        assert snap["change"]["status"] in ("primary", "secondary")
        ladder = [e["status"] for e in snap.get("status_events", [])]
        for _ in range(30):
            ws.send_text(json.dumps({"type": "tick"}))
            msg = ws.receive_json()
            ladder.extend(e["status"] for e in msg.get("status_events", []))
            if msg["change"] is None:
                break
        assert ladder == ["propagating", "primary", "secondary", "resolved"]

        # rejected while still resolving or after: entry/exit box protected
        ws.send_text(json.dumps({"type": "remove_box", "i": 0, "j": 0}))
        err = ws.receive_json()
        assert err["type"] == "error"
        assert err["code"] in ("TouchesEntryExit", "ChangeInProgress")

        for _ in range(20):
            ws.send_text(json.dumps({"type": "tick"}))
            ws.receive_json()

    # replay the recorded command log headlessly: identical world evolution
    session = app.state.session
    live_digest = session.trace.close()
    replay = session.replay_scenario()
    _, writer = run_scenario(replay)
    assert writer.close() == live_digest


def test_serve_rejects_double_change_and_bad_method():
    app, client = make_session_client()
    with client.websocket_connect("/ws") as ws:
        ws.receive_json()
        for _ in range(40):
            ws.send_text(json.dumps({"type": "tick"}))
            ws.receive_json()
        ws.send_text(json.dumps({"type": "add_box", "i": 2, "j": 0}))
        first = ws.receive_json()
        assert first["type"] == "snapshot"
        ws.send_text(json.dumps({"type": "add_box", "i": 0, "j": 2}))
        err = ws.receive_json()
        assert err["type"] == "error" and err["code"] == "ChangeInProgress"
        ws.send_text(json.dumps({"type": "select_method", "method": "teleport"}))
        err = ws.receive_json()
        assert err["type"] == "error" and err["code"] == "BadMethod"


def test_serve_closes_on_unknown_command():
    app, client = make_session_client()
    with client.websocket_connect("/ws") as ws:
        ws.receive_json()
        ws.send_text(json.dumps({"type": "dance"}))
        bye = ws.receive_json()
        assert bye == {"type": "bye", "reason": "UnknownCommand"}


def test_serve_static_ui(tmp_path):
    ui = tmp_path / "ui"
    ui.mkdir()
    (ui / "index.html").write_text("<!doctype html><title>sculpt</title>")
    scenario = scenario_from_json(square_scenario_doc(script=[], steps=5))
    app = create_app(scenario, ui_dir=str(ui))
    client = TestClient(app)
    page = client.get("/")
    assert page.status_code == 200 and "sculpt" in page.text
    assert client.get("/healthz").json()["ok"]


def test_bundled_scenarios_run_and_check(tmp_path):
    # the files shipped in scenarios/ stay loadable and their traces clean
    import pathlib

    runner = CliRunner()
    for name in ("persistence.json", "n_to_u.json"):
        src = pathlib.Path(__file__).resolve().parents[1] / "scenarios" / name
        trace = tmp_path / (name + ".jsonl")
        steps = [] if name == "persistence.json" else ["--steps", "200"]
        res = runner.invoke(
            main, ["run", "--scenario", str(src), "--trace", str(trace), *steps]
        )
        assert res.exit_code == 0, res.output
        res = runner.invoke(main, ["check", "--trace", str(trace)])
        assert res.exit_code == 0, res.output


def test_serve_speed_and_pause_controls():
    app, client = make_session_client()
    with client.websocket_connect("/ws") as ws:
        ws.receive_json()
        ws.send_text(json.dumps({"type": "set_speed", "steps_per_second": 50}))
        snap = ws.receive_json()
        assert snap["speed"] == 50
        ws.send_text(json.dumps({"type": "resume"}))
        snap = ws.receive_json()
        assert snap["paused"] is False
        # the background ticker advances the world without explicit ticks
        msg = drain_until(ws, "step")
        assert msg["step"] >= 1
        ws.send_text(json.dumps({"type": "pause"}))
        drain_until(ws, "snapshot")
