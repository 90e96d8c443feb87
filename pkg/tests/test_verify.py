import json

import pytest

from swarmsculpt.lattice import validate_shape
from swarmsculpt.paths import (
    Path,
    PathKind,
    is_spanning,
    merge_paths,
    separate_path,
    spanning_pair_partner,
)
from swarmsculpt.planner import exhaustive_cycle, reference_path
from swarmsculpt.scenario import read_trace, run_scenario, scenario_from_json
from swarmsculpt.shapes import enumerate_shapes
from swarmsculpt.verify import (
    CheckReport,
    MalformedTrace,
    check_lemma,
    check_planar_hamiltonian,
    check_theorem,
    check_trace,
    removed_box_was_leaf,
)

from conftest import seq_to_edges


def test_hamiltonian_check_passes_reference(unit_shape, ell_shape, square_shape):
    for shape in (unit_shape, ell_shape, square_shape):
        rep = check_planar_hamiltonian(shape, reference_path(shape))
        assert rep.passed
        assert rep.metrics["nodes"] == len(shape.nodes)


def test_hamiltonian_check_fails_on_skipped_node():
    shape = validate_shape({(0, 0), (0, 1)}, entry=(0, 0), exit=(1, 0))
    # jump straight down the x=0 column and over, skipping (1,3)...
    edges = seq_to_edges([(0, 0), (0, 1), (0, 2), (0, 3), (1, 3), (1, 2), (1, 1), (1, 0)])
    del edges[(0, 3)]
    edges[(0, 3)] = (0, 2)  # stitch a bad loop
    bad = Path(edges=edges, entry=(0, 0), exit=(1, 0))
    rep = check_planar_hamiltonian(shape, bad)
    assert not rep.passed


def test_hamiltonian_check_accepts_brute_force_outputs():
    count = 0
    for shape in enumerate_shapes(3):
        p = exhaustive_cycle(shape)
        assert check_planar_hamiltonian(shape, p).passed
        count += 1
    assert count > 20


def test_hamiltonian_check_rejects_bad_entry_exit(square_shape):
    p = reference_path(square_shape)
    weird = Path(edges=p.edges, entry=(0, 0), exit=(2, 2))
    assert not check_planar_hamiltonian(square_shape, weird).passed


# --- lemmas -------------------------------------------------------------------


def test_lemma_1_and_2_round(ell_shape):
    path = reference_path(ell_shape)
    spanning = sorted((a, b) for a, b in path.edges.items() if is_spanning((a, b)))
    pair = (spanning[0], spanning_pair_partner(spanning[0]))
    split = separate_path(path, pair)
    rep2 = check_lemma(2, {"shape": ell_shape, "before": path, "path": split})
    assert rep2.passed
    back_pair = ((pair[0][0], pair[1][1]), (pair[1][0], pair[0][1]))
    merged = merge_paths(split, back_pair)
    rep1 = check_lemma(1, {"shape": ell_shape, "path": merged})
    assert rep1.passed


def test_lemma_3_prefix_locality(ell_shape, square_shape):
    assert check_lemma(3, {"shape": ell_shape, "grown": square_shape}).passed


def test_lemma_4_suffix_locality(square_shape):
    # The suffix lemma speaks of the box added last in the assembly order:
    # growing {(0,0),(0,1),(1,1)} by (1,0) reproduces the square that way.
    small = validate_shape({(0, 0), (0, 1), (1, 1)}, entry=(0, 0), exit=(1, 0))
    inst = {"shape": small, "grown": square_shape}
    assert check_lemma(3, inst).passed
    assert check_lemma(4, inst).passed


def test_lemma_5_mutation_sensitivity(ell_shape):
    path = reference_path(ell_shape)
    assert check_lemma(5, {"path": path}).passed
    edges = dict(path.edges)
    edges[(3, 1)] = (2, 1)  # NE -> NW runs backwards around box (1,0)
    mutated = Path(edges=edges, entry=path.entry, exit=path.exit)
    rep = check_lemma(5, {"path": mutated})
    assert not rep.passed and rep.counterexample["edge"] == ((3, 1), (2, 1))


def test_lemma_6_mutation_sensitivity(square_shape):
    path = reference_path(square_shape)
    assert check_lemma(6, {"path": path}).passed
    edges = dict(path.edges)
    edges.update({(2, 1): (2, 2), (2, 2): (2, 1)})  # unpaired shuttle
    mutated = Path(edges=edges, entry=path.entry, exit=path.exit)
    assert not check_lemma(6, {"path": mutated}).passed


# --- theorems -----------------------------------------------------------------


def test_theorem_1_and_2_small(ell_shape, six_box_shape):
    for shape in (ell_shape, six_box_shape):
        assert check_theorem(1, {"shape": shape}).passed
        assert check_theorem(2, {"shape": shape}).passed


def run_change(shape, add, box, method):
    from swarmsculpt.engine import SimConfig, World
    from swarmsculpt.paths import PathKind

    n = len(shape.nodes)
    cfg = SimConfig(robot_count=n + 16, station_slots=n + 10, charge_steps=1)
    w = World(cfg, shape)
    w.run_until(lambda w: w.fully_occupied(), 300)
    w.inject_change(add=add, box=box, method=method)
    kinds = []
    t0 = w.step_index
    while w.active is not None:
        w.step()
        assert w.step_index - t0 < 200
        if w.active is not None and w.active.status == "secondary":
            kinds.append(w.classify_committed().kind)
    w.run_until(lambda w: w.fully_occupied(), 300)
    return w, w.resolved_changes[-1], kinds


def test_theorem_3_on_engine_addition(ell_shape):
    w, change, _ = run_change(ell_shape, True, (1, 1), "comm")
    assert check_theorem(3, {"change": change}).passed


def test_theorem_4_leaf_and_branch(square_shape):
    w, change, _ = run_change(square_shape, False, (1, 1), "movement")
    assert not removed_box_was_leaf(change)  # (1,1) is a branch of the square
    assert check_theorem(4, {"change": change}).passed
    ell = validate_shape({(0, 0), (1, 0), (0, 1)}, entry=(0, 0), exit=(1, 0))
    w, change, _ = run_change(ell, False, (0, 1), "comm")
    assert removed_box_was_leaf(change)
    assert check_theorem(4, {"change": change}).passed


def test_theorem_5_on_engine_movement(square_shape):
    w, change, kinds = run_change(square_shape, False, (1, 1), "movement")
    rep = check_theorem(
        5, {"interim_kinds": kinds, "final": w.classify_committed()}
    )
    assert rep.passed


# --- traces ---------------------------------------------------------------------


def scenario_with_change():
    return scenario_from_json(
        {
            "schema_version": 1,
            "config": {"robot_count": 34, "station_slots": 18, "charge_steps": 1},
            "shape": {
                "boxes": [[0, 0], [0, 1], [1, 0], [1, 1]],
                "entry": [0, 0],
                "exit": [1, 0],
            },
            "script": [{"step": 30, "op": "remove", "box": [1, 1], "method": "comm"}],
            "steps": 70,
        }
    )


def test_check_trace_all_pass(tmp_path):
    run_scenario(scenario_with_change(), tmp_path / "t.jsonl")[1].close()
    records = read_trace(tmp_path / "t.jsonl")
    reports = check_trace(records)
    assert {r.check_name for r in reports} == {
        "occupancy", "travel_separation", "liveness", "cadence", "change_resolution",
    }
    for r in reports:
        assert r.passed, r


def test_check_trace_catches_shared_node(tmp_path):
    run_scenario(scenario_with_change(), tmp_path / "t.jsonl")[1].close()
    records = read_trace(tmp_path / "t.jsonl")
    victim = next(r for r in records if r.get("kind") == "step" and r["step"] == 40)
    in_shape = [r for r in victim["robots"] if r["phase"] == "in_shape"]
    in_shape[1]["pos"] = in_shape[0]["pos"]
    rep = next(r for r in check_trace(records) if r.check_name == "occupancy")
    assert not rep.passed and rep.counterexample["step"] == 40


def test_check_trace_catches_unresolved_change(tmp_path):
    run_scenario(scenario_with_change(), tmp_path / "t.jsonl")[1].close()
    records = [
        r
        for r in read_trace(tmp_path / "t.jsonl")
        if not (r.get("kind") == "event" and r.get("status") == "resolved")
    ]
    rep = next(r for r in check_trace(records) if r.check_name == "change_resolution")
    assert not rep.passed


def test_check_trace_catches_travel_collision(tmp_path):
    run_scenario(scenario_with_change(), tmp_path / "t.jsonl")[1].close()
    records = read_trace(tmp_path / "t.jsonl")
    victim = next(r for r in records if r.get("kind") == "step" and r["step"] == 40)
    travelers = [r for r in victim["robots"] if r["phase"] in ("to_station", "to_shape")]
    assert len(travelers) >= 2
    travelers[1]["pos"] = travelers[0]["pos"]
    rep = next(
        r for r in check_trace(records) if r.check_name == "travel_separation"
    )
    assert not rep.passed and rep.counterexample["step"] == 40


def test_check_trace_catches_cadence_gap(tmp_path):
    run_scenario(scenario_with_change(), tmp_path / "t.jsonl")[1].close()
    records = read_trace(tmp_path / "t.jsonl")
    # erase one steady-state arrival: the one-in-one-out rhythm breaks
    doctored = [
        r
        for r in records
        if not (
            r.get("kind") == "event"
            and r.get("event") == "enter"
            and r["step"] == 20
        )
    ]
    rep = next(r for r in check_trace(doctored) if r.check_name == "cadence")
    assert not rep.passed and rep.counterexample["step"] == 20


def test_check_trace_catches_overstaying_robot(tmp_path):
    run_scenario(scenario_with_change(), tmp_path / "t.jsonl")[1].close()
    records = read_trace(tmp_path / "t.jsonl")
    exit_ev = next(
        r
        for r in records
        if r.get("kind") == "event" and r.get("event") == "exit" and r["step"] > 30
    )
    exit_ev["step"] = exit_ev["step"] + 500  # robot lingered far past its bound
    rep = next(r for r in check_trace(records) if r.check_name == "liveness")
    assert not rep.passed and rep.counterexample["robot"] == exit_ev["robot"]


def test_check_trace_rejects_malformed():
    with pytest.raises(MalformedTrace):
        check_trace([{"kind": "step", "step": 0, "robots": []}])


def test_report_counterexample_discipline():
    with pytest.raises(ValueError):
        CheckReport("x", True, {"oops": 1})
