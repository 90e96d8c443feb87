"""Executable checkers: path properties, change outcomes, and whole traces.

Checkers are deliberately independent of the construction code they audit;
the Hamiltonian check below walks raw successor pointers and never calls
the planner.  Each check returns a CheckReport with a counterexample when
it fails, so the CLI can print actionable verdicts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .lattice import Shape, box_of, is_clockwise, periphery_nodes, validate_shape
from .paths import Path, PathKind, classify_path, is_spanning, spanning_pair_partner


class MalformedTrace(ValueError):
    pass


@dataclass
class CheckReport:
    check_name: str
    passed: bool
    counterexample: dict | None = None
    metrics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.passed and self.counterexample is not None:
            raise ValueError("passing reports carry no counterexample")
        if not self.passed and self.counterexample is None:
            self.counterexample = {}


def check_planar_hamiltonian(shape: Shape, path: Path) -> CheckReport:
    """Every in-shape node exactly once, entry to exit, over lattice edges.

    Entry and exit must be adjacent periphery nodes.  Planarity is inherent
    to axis-aligned unit edges; the single-successor walk below rules out
    any revisit or detached loop.
    """
    name = "planar_hamiltonian"
    peri = periphery_nodes(shape)
    e, x = path.entry, path.exit
    if abs(e[0] - x[0]) + abs(e[1] - x[1]) != 1 or e not in peri or x not in peri:
        return CheckReport(name, False, {"reason": "entry/exit placement", "entry": e, "exit": x})
    seen = {e}
    node = e
    steps = 0
    while node != x:
        nxt = path.successor(node)
        if nxt is None:
            return CheckReport(name, False, {"reason": "dead end", "node": node})
        if nxt not in shape.nodes:
            return CheckReport(name, False, {"reason": "left the shape", "node": nxt})
        if abs(nxt[0] - node[0]) + abs(nxt[1] - node[1]) != 1:
            return CheckReport(name, False, {"reason": "non-lattice hop", "edge": (node, nxt)})
        if nxt in seen:
            return CheckReport(name, False, {"reason": "revisit", "node": nxt})
        seen.add(nxt)
        node = nxt
        steps += 1
        if steps > len(shape.nodes):
            return CheckReport(name, False, {"reason": "walk overran the shape"})
    missing = shape.nodes - seen
    if missing:
        return CheckReport(name, False, {"reason": "uncovered", "node": min(missing)})
    if len(path.edges) != len(shape.nodes) - 1:
        return CheckReport(name, False, {"reason": "stray edges beyond the walk"})
    return CheckReport(name, True, metrics={"nodes": len(seen)})


# --- lemma checks -------------------------------------------------------------


def _check_lemma_1(instance) -> CheckReport:
    """Merging a legal pair keeps a single at-least-valid cycle."""
    shape, merged = instance["shape"], instance["path"]
    cls = classify_path(shape, merged)
    ok = cls.kind in (PathKind.VALID, PathKind.PREFERRED)
    return CheckReport(
        "lemma_1_merge", ok,
        None if ok else {"class": cls.kind.value},
        metrics={"sub_cycles": cls.sub_cycle_count},
    )


def _check_lemma_2(instance) -> CheckReport:
    """Separation yields cycles on both sides: one more loop than before."""
    shape, before, after = instance["shape"], instance["before"], instance["path"]
    b = classify_path(shape, before)
    a = classify_path(shape, after)
    ok = (
        a.kind in (PathKind.PSEUDO_VALID, PathKind.VALID, PathKind.PREFERRED)
        and a.sub_cycle_count == b.sub_cycle_count + 1
    )
    return CheckReport(
        "lemma_2_separate", ok,
        None if ok else {"before": b, "after": a},
        metrics={"sub_cycles": a.sub_cycle_count},
    )


def _traversal_nodes(shape: Shape) -> list:
    from .agent import traverse

    return traverse(shape).to_sequence()


def _check_lemma_3(instance) -> CheckReport:
    """A box is invisible until reached: visit prefixes agree up to it."""
    small, big = instance["shape"], instance["grown"]
    box = next(iter(big.boxes - small.boxes))
    t_small = _traversal_nodes(small)
    t_big = _traversal_nodes(big)
    k = next(i for i, n in enumerate(t_big) if box_of(n) == box)
    ok = t_small[: k] == t_big[: k]
    return CheckReport(
        "lemma_3_prefix", ok,
        None if ok else {"first_divergence": next(
            (i for i, (a, b) in enumerate(zip(t_small, t_big)) if a != b), None
        )},
        metrics={"prefix": k},
    )


def _check_lemma_4(instance) -> CheckReport:
    """After its loop, a box leaves no trace: removal restores the old walk."""
    small, big = instance["shape"], instance["grown"]
    box = next(iter(big.boxes - small.boxes))
    t_small = _traversal_nodes(small)
    t_big = _traversal_nodes(big)
    positions = [i for i, n in enumerate(t_big) if box_of(n) == box]
    contiguous = positions == list(range(positions[0], positions[0] + 4))
    stripped = [n for n in t_big if box_of(n) != box]
    ok = contiguous and stripped == t_small
    return CheckReport(
        "lemma_4_suffix", ok,
        None if ok else {"loop_positions": positions},
        metrics={"loop_start": positions[0] if positions else -1},
    )


def _check_lemma_5(instance) -> CheckReport:
    """Within-box path edges run clockwise around their box center."""
    path = instance["path"]
    for a, b in sorted(path.edges.items()):
        if not is_spanning((a, b)) and not is_clockwise((a, b)):
            return CheckReport("lemma_5_clockwise", False, {"edge": (a, b)})
    return CheckReport("lemma_5_clockwise", True)


def _check_lemma_6(instance) -> CheckReport:
    """Spanning edges come in parallel-opposite pairs over one connection."""
    path = instance["path"]
    for a, b in sorted(path.edges.items()):
        if is_spanning((a, b)):
            pa, pb = spanning_pair_partner((a, b))
            if path.edges.get(pa) != pb:
                return CheckReport("lemma_6_pairs", False, {"edge": (a, b)})
    return CheckReport("lemma_6_pairs", True)


def check_lemma(lemma_id: int, instance: dict) -> CheckReport:
    checks = {
        1: _check_lemma_1,
        2: _check_lemma_2,
        3: _check_lemma_3,
        4: _check_lemma_4,
        5: _check_lemma_5,
        6: _check_lemma_6,
    }
    return checks[lemma_id](instance)


# --- theorem checks -------------------------------------------------------------


def _check_theorem_1(instance) -> CheckReport:
    """A full cycle exists for the shape: the constructed path proves it."""
    from .planner import reference_path

    shape = instance["shape"]
    rep = check_planar_hamiltonian(shape, reference_path(shape))
    return CheckReport("theorem_1_exists", rep.passed, rep.counterexample, rep.metrics)


def _check_theorem_2(instance) -> CheckReport:
    """The local rules trace exactly the centrally constructed path."""
    from .agent import traverse
    from .planner import reference_path

    shape = instance["shape"]
    walked = traverse(shape)
    ref = reference_path(shape)
    ok = walked.edge_set() == ref.edge_set()
    extra = sorted(walked.edge_set() - ref.edge_set())
    return CheckReport(
        "theorem_2_equivalence", ok,
        None if ok else {"diverging_edges": extra[:4]},
        metrics={"nodes": len(shape.nodes)},
    )


def _interim_class(change) -> "PathClass":
    path = Path(
        edges=dict(change.interim_edges),
        entry=change.new_shape.entry,
        exit=change.new_shape.exit,
    )
    return classify_path(change.new_shape, path)


def _check_theorem_3(instance) -> CheckReport:
    """Addition primary changes leave a valid path."""
    change = instance["change"]
    cls = _interim_class(change)
    ok = change.add and cls.kind in (PathKind.VALID, PathKind.PREFERRED)
    return CheckReport(
        "theorem_3_addition", ok,
        None if ok else {"class": cls.kind.value},
        metrics={"sub_cycles": cls.sub_cycle_count},
    )


def removed_box_was_leaf(change) -> bool:
    from .planner import spanning_tree

    tree = spanning_tree(change.old_shape)
    return not tree.children.get(change.box)


def _check_theorem_4(instance) -> CheckReport:
    """Subtraction primary changes leave at least a pseudo-valid path;
    removing a leaf lands directly on the canonical path."""
    change = instance["change"]
    cls = _interim_class(change)
    if change.add:
        return CheckReport("theorem_4_subtraction", False, {"reason": "not a removal"})
    if removed_box_was_leaf(change):
        ok = cls.kind is PathKind.PREFERRED
    else:
        ok = cls.kind in (PathKind.PSEUDO_VALID, PathKind.VALID, PathKind.PREFERRED)
    return CheckReport(
        "theorem_4_subtraction", ok,
        None if ok else {"class": cls.kind.value, "leaf": removed_box_was_leaf(change)},
        metrics={"sub_cycles": cls.sub_cycle_count},
    )


def _check_theorem_5(instance) -> CheckReport:
    """Movement-based repair: never invalid, and it ends on the canonical path."""
    kinds = instance["interim_kinds"]
    final = instance["final"]
    bad = [k for k in kinds if k is PathKind.INVALID]
    ok = not bad and final.kind is PathKind.PREFERRED
    return CheckReport(
        "theorem_5_swaps", ok,
        None if ok else {"invalid_steps": len(bad), "final": final.kind.value},
        metrics={"interim_steps": len(kinds)},
    )


def check_theorem(theorem_id: int, instance: dict) -> CheckReport:
    checks = {
        1: _check_theorem_1,
        2: _check_theorem_2,
        3: _check_theorem_3,
        4: _check_theorem_4,
        5: _check_theorem_5,
    }
    return checks[theorem_id](instance)


# --- trace-level checks -----------------------------------------------------------


def _trace_shapes(records) -> dict[int, Shape]:
    """Shape in force from each change seq (0 = initial)."""
    header = records[0]
    if header.get("kind") != "header":
        raise MalformedTrace("trace must start with a header record")
    boxes = {tuple(b) for b in header["shape"]["boxes"]}
    entry = tuple(header["shape"]["entry"])
    exit_ = tuple(header["shape"]["exit"])
    shapes = {0: validate_shape(boxes, entry=entry, exit=exit_)}
    current = set(boxes)
    for rec in records:
        if (
            rec.get("kind") == "event"
            and rec.get("event") == "change_status"
            and rec.get("status") == "propagating"
        ):
            box = tuple(rec["box"])
            (current.add if rec["add"] else current.discard)(box)
            shapes[rec["seq"]] = validate_shape(current, entry=entry, exit=exit_)
    return shapes


def check_trace(records: list[dict]) -> list[CheckReport]:
    """Occupancy, travel separation, liveness, cadence, change resolution."""
    if not records or records[0].get("kind") != "header":
        raise MalformedTrace("missing header record")
    steps = [r for r in records if r.get("kind") == "step"]
    events = [r for r in records if r.get("kind") == "event"]
    if not steps:
        raise MalformedTrace("trace has no step records")
    reports: list[CheckReport] = []

    # occupancy and travel separation
    occupancy_bad = travel_bad = None
    for rec in steps:
        nodes = [tuple(r["pos"]) for r in rec["robots"] if r["phase"] == "in_shape"]
        if len(nodes) != len(set(nodes)) and occupancy_bad is None:
            occupancy_bad = rec["step"]
        legs = [
            tuple(r["pos"])
            for r in rec["robots"]
            if r["phase"] in ("to_station", "to_shape") and r["pos"] is not None
        ]
        if len(legs) != len(set(legs)) and travel_bad is None:
            travel_bad = rec["step"]
    reports.append(
        CheckReport(
            "occupancy", occupancy_bad is None,
            None if occupancy_bad is None else {"step": occupancy_bad},
            metrics={"steps": len(steps)},
        )
    )
    reports.append(
        CheckReport(
            "travel_separation", travel_bad is None,
            None if travel_bad is None else {"step": travel_bad},
        )
    )

    # liveness: in-shape stretches are bounded by nodes plus hold windows
    change_active = {
        rec["step"] for rec in steps if rec.get("change") is not None
    }
    nodes_at = {rec["step"]: rec["shape_boxes"] * 4 for rec in steps}
    enters: dict[int, int] = {}
    worst = None
    for ev in events:
        if ev["event"] == "enter":
            enters[ev["robot"]] = ev["step"]
        elif ev["event"] == "exit" and ev["robot"] in enters:
            start = enters.pop(ev["robot"])
            holds = sum(1 for s in range(start, ev["step"]) if s in change_active)
            bound = max(nodes_at.get(s, 0) for s in (start, ev["step"])) + holds + 2
            span = ev["step"] - start
            if span > bound:
                worst = {"robot": ev["robot"], "span": span, "bound": bound}
    reports.append(CheckReport("liveness", worst is None, worst))

    # cadence: in steady quiet stretches, one enter and one exit per step
    full = {
        rec["step"]
        for rec in steps
        if sum(1 for r in rec["robots"] if r["phase"] == "in_shape")
        == rec["shape_boxes"] * 4
    }
    enter_steps = {e["step"] for e in events if e["event"] == "enter"}
    exit_steps = {e["step"] for e in events if e["event"] == "exit"}
    cadence_bad = None
    for rec in steps:
        t = rec["step"]
        if t - 1 in full and t in full and t not in change_active and t - 1 not in change_active:
            if t not in enter_steps or t not in exit_steps:
                cadence_bad = t
                break
    reports.append(
        CheckReport(
            "cadence", cadence_bad is None,
            None if cadence_bad is None else {"step": cadence_bad},
        )
    )

    # change resolution: every injected change resolves, and the committed
    # path digest settles on the canonical digest for its shape
    from .planner import reference_path
    from .scenario import path_digest

    shapes = _trace_shapes(records)
    statuses: dict[int, list] = {}
    for ev in events:
        if ev["event"] == "change_status" and ev.get("seq") is not None:
            statuses.setdefault(ev["seq"], []).append((ev["step"], ev["status"]))
    unresolved = [
        seq for seq, sts in statuses.items() if sts[-1][1] != "resolved"
    ]
    settle_bad = None
    seqs = sorted(statuses)
    for i, seq in enumerate(seqs):
        resolved_at = statuses[seq][-1][0]
        horizon = statuses[seqs[i + 1]][0][0] if i + 1 < len(seqs) else steps[-1]["step"] + 1
        want = path_digest(reference_path(shapes[seq]).edges)
        window = [r for r in steps if resolved_at <= r["step"] < horizon]
        if not any(r["path"] == want for r in window):
            settle_bad = {"seq": seq, "expected_digest": want}
            break
    ok = not unresolved and settle_bad is None
    reports.append(
        CheckReport(
            "change_resolution", ok,
            None if ok else {"unresolved": unresolved, "settle": settle_bad},
            metrics={"changes": len(statuses)},
        )
    )
    return reports
