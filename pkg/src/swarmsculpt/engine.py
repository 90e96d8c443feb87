"""Deterministic lockstep world: motion, messaging, station, changes, trace.

Step phases, in order: simultaneous motion (chained vacancy, admissions,
exits), post-motion message delivery (pass-backs and drain follow-me),
primary-completion handling (role promotion or the memory-message sweep),
travel and station bookkeeping, then planning for the next step including
destination-conflict resolution.  Change notices are injected between
steps, while every robot is at rest with a committed heading.

Everything iterates in sorted id/node order; a config, shape, and script
fix the run byte for byte.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

from . import agent
from .agent import (
    ChangeRobotIntent,
    MemoryState,
    PassBackMessage,
    Phase,
    Role,
    RobotState,
    ShapeDelta,
)
from .lattice import (
    Box,
    Edge,
    GridSpec,
    Node,
    Shape,
    ShapeError,
    box_nodes,
    cw_next,
    neighbors4,
    neighbors8,
    validate_shape,
)
from .paths import Path, PathClass, classify_path


class EngineError(RuntimeError):
    pass


class InvariantViolation(EngineError):
    def __init__(self, message: str, world: "World"):
        super().__init__(f"{message}\n--- state dump ---\n{world.dump()}")


class ChangeRejected(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


@dataclass
class SimConfig:
    robot_count: int
    station_slots: int
    initial_queue: int | None = None  # default: robot_count - station_slots
    tau: float = 12.0
    charge_steps: int = 10
    comm_rounds_per_step: int = 256
    grid: GridSpec = field(default_factory=GridSpec)
    waypoints_out: tuple = ()
    waypoints_in: tuple = ()
    seed: int = 0
    record_messages: bool = False

    def queue_size(self) -> int:
        if self.initial_queue is None:
            return max(0, self.robot_count - self.station_slots)
        return self.initial_queue


def default_waypoints(shape: Shape) -> tuple[tuple, tuple]:
    """Disjoint three-leg routes through the entry/exit side."""
    dx, dy = shape.broken_side_dir()
    ex, ey = shape.exit
    nx, ny = shape.entry
    out = tuple((ex + k * dx, ey + k * dy) for k in (1, 2, 3))
    into = tuple((nx + k * dx, ny + k * dy) for k in (3, 2, 1))
    return out, into


STATUS_PROPAGATING = "propagating"
STATUS_PRIMARY = "primary"
STATUS_SECONDARY = "secondary"
STATUS_RESOLVED = "resolved"


@dataclass
class ChangeState:
    seq: int
    add: bool
    box: Box
    method: str  # "comm" | "movement"
    status: str
    old_shape: Shape
    new_shape: Shape
    inflection: Node
    inflection_prev: Node | None
    repair_start: Node
    fill_entry_edge: Edge | None
    injected_at: int
    primary_done_at: int | None = None
    resolved_at: int | None = None
    interim_edges: dict | None = None  # committed path at primary completion

    def removed_nodes(self) -> frozenset[Node]:
        return frozenset() if self.add else frozenset(box_nodes(self.box))

    def added_nodes(self) -> frozenset[Node]:
        return frozenset(box_nodes(self.box)) if self.add else frozenset()


class World:
    def __init__(self, config: SimConfig, shape: Shape, trace_sink=None):
        if not config.waypoints_out or not config.waypoints_in:
            out, into = default_waypoints(shape)
            config.waypoints_out = tuple(config.waypoints_out) or out
            config.waypoints_in = tuple(config.waypoints_in) or into
        capacity = (
            config.station_slots
            + len(shape.nodes)
            + len(config.waypoints_out)
            + len(config.waypoints_in)
            + config.queue_size()
        )
        if config.robot_count > capacity:
            raise EngineError(
                f"StationOverflow: {config.robot_count} robots exceed capacity {capacity}"
            )
        self.config = config
        self.shape = shape
        self.step_index = 0
        self.change_seq = 0
        self.active: ChangeState | None = None
        self.resolved_changes: list[ChangeState] = []
        self.robots: dict[int, RobotState] = {}
        self.occupancy: dict[Node, int] = {}
        self.edge_map: dict[Node, Node] = {}
        self.staging: deque[int] = deque()
        self.station: deque[int] = deque()
        self.charge_left: dict[int, int] = {}
        self.travel: dict[int, tuple[str, int]] = {}
        self._fresh_staged: list[int] = []
        self.pending_delta: ShapeDelta | None = None
        self.carrier: tuple[int, ShapeDelta] | None = None
        self.trace = trace_sink
        self.events: list[dict] = []
        self.cycle_exits: dict[int, int] = {}

        queue_n = min(config.queue_size(), config.robot_count)
        for rid in range(config.robot_count):
            r = RobotState(id=rid, phase=Phase.QUEUED, shape=shape)
            self.robots[rid] = r
            if rid < queue_n:
                self.staging.append(rid)
            else:
                r.phase = Phase.CHARGING
                self.station.append(rid)
                self.charge_left[rid] = config.charge_steps
            self.cycle_exits[rid] = 0
        if self.trace is not None:
            self.trace.header(self)

    # --- views --------------------------------------------------------------

    def in_shape(self) -> list[RobotState]:
        return [
            self.robots[rid]
            for rid in sorted(self.robots)
            if self.robots[rid].phase is Phase.IN_SHAPE
        ]

    def fully_occupied(self) -> bool:
        return all(n in self.occupancy for n in self.shape.nodes)

    def event(self, kind: str, **data):
        rec = {"kind": kind, "step": self.step_index, **data}
        self.events.append(rec)
        if self.trace is not None:
            self.trace.event(rec)

    def dump(self) -> str:
        robots = {
            rid: {
                "phase": r.phase.value,
                "role": r.role.value,
                "node": r.node,
                "planned": r.planned_edge,
                "held": r.held,
            }
            for rid, r in sorted(self.robots.items())
        }
        return json.dumps(
            {
                "step": self.step_index,
                "robots": robots,
                "shape": sorted(self.shape.boxes),
                "change": None if self.active is None else self.active.status,
            },
            default=str,
        )

    def effective_path_edges(self) -> dict[Node, Node]:
        """Node -> committed next node: occupant plans over last departures."""
        edges = {
            n: t
            for n, t in self.edge_map.items()
            if n in self.shape.nodes and t in self.shape.nodes
        }
        for r in self.in_shape():
            if r.planned_edge is not None:
                edges[r.planned_edge[0]] = r.planned_edge[1]
        edges.pop(self.shape.exit, None)
        return edges

    def committed_path(self) -> Path:
        return Path(
            edges=self.effective_path_edges(),
            entry=self.shape.entry,
            exit=self.shape.exit,
        )

    def classify_committed(self, reference: Path | None = None) -> PathClass:
        return classify_path(self.shape, self.committed_path(), reference=reference)

    def changeable(self) -> bool:
        return self.active is None and self.fully_occupied()

    def eligible_boxes(self) -> tuple[list[Box], list[Box]]:
        """Boxes a client may add / remove right now (server-side hints)."""
        addable, removable = [], []
        if not self.changeable():
            return addable, removable
        for box in sorted(self.shape.boxes):
            try:
                self._validate_change(False, box)
                removable.append(box)
            except ChangeRejected:
                pass
        frontier = sorted(
            {
                (b[0] + d[0], b[1] + d[1])
                for b in self.shape.boxes
                for d in ((0, 1), (0, -1), (1, 0), (-1, 0))
            }
            - set(self.shape.boxes)
        )
        for box in frontier:
            try:
                self._validate_change(True, box)
                addable.append(box)
            except ChangeRejected:
                pass
        return addable, removable

    # --- change injection -----------------------------------------------------

    def _validate_change(self, add: bool, box: Box) -> Shape:
        if self.active is not None:
            raise ChangeRejected("ChangeInProgress", "a change is being resolved")
        if add == (box in self.shape.boxes):
            raise ChangeRejected(
                "InvalidResultingShape",
                "box already present" if add else "box not in shape",
            )
        if box == self.shape.root_box:
            raise ChangeRejected("TouchesEntryExit", "entry/exit box is fixed")
        dx, dy = self.shape.broken_side_dir()
        ri, rj = self.shape.root_box
        if add and box == (ri + dx, rj + dy):
            raise ChangeRejected(
                "TouchesEntryExit", "box would block the entry/exit side"
            )
        boxes = set(self.shape.boxes)
        (boxes.add if add else boxes.discard)(box)
        try:
            return validate_shape(boxes, entry=self.shape.entry, exit=self.shape.exit)
        except ShapeError as e:
            raise ChangeRejected("InvalidResultingShape", str(e)) from e

    def _flood_notice(self, box: Box) -> int:
        """Flood the notice over in-range hops; returns rounds to quiesce."""
        sensed = set(box_nodes(box)) | {
            nb for n in box_nodes(box) for nb in neighbors8(n)
        }
        frontier = sorted(n for n in self.occupancy if n in sensed)
        reached = set(frontier)
        rounds = 0
        while frontier:
            nxt = []
            for n in frontier:
                for nb in neighbors8(n):
                    if nb in self.occupancy and nb not in reached:
                        reached.add(nb)
                        nxt.append(nb)
            if nxt:
                rounds += 1
            frontier = sorted(nxt)
        if rounds > self.config.comm_rounds_per_step:
            raise InvariantViolation("notice flooding failed to quiesce", self)
        return rounds

    def _change_is_trivial(self, add: bool, box: Box) -> bool:
        """A change nobody's traversal state has reached: no repair needed.

        Removing a box no robot has entered (or plans to occupy), or adding a
        box whose attach strips no robot has visited, only requires updating
        shape views; every future default step already lands on the new
        canonical path.
        """
        if add:
            adj = {
                nb
                for n in box_nodes(box)
                for nb in neighbors4(n)
                if nb in self.shape.nodes
            }
            return not any(
                n in r.memory.node_set for r in self.in_shape() for n in adj
            )
        nodes = set(box_nodes(box))
        if any(n in self.occupancy for n in nodes):
            return False
        return not any(
            n in r.memory.node_set for r in self.in_shape() for n in nodes
        )

    def _resolve_trivially(self, new_shape: Shape, removed) -> None:
        self.shape = new_shape
        for r in self.in_shape():
            r.shape = new_shape
        for n in removed:
            self.edge_map.pop(n, None)
        self.pending_delta = ShapeDelta(
            seq=self.change_seq,
            added=tuple(),
            removed=tuple(sorted(removed)),
        )
        self.event("change_status", seq=self.change_seq, status=STATUS_RESOLVED,
                   trivial=True)
        self._plan_all()

    def inject_change(self, add: bool, box: Box, method: str = "comm") -> None:
        """Deliver a change notice; robots detect, and primary changes begin."""
        if method not in ("comm", "movement"):
            raise ChangeRejected("InvalidResultingShape", f"unknown method {method}")
        new_shape = self._validate_change(add, box)
        if self._change_is_trivial(add, box):
            self.change_seq += 1
            rounds = self._flood_notice(box)
            self.event(
                "change_status",
                seq=self.change_seq,
                status=STATUS_PROPAGATING,
                box=box,
                add=add,
                method=method,
                flood_rounds=rounds,
            )
            self._resolve_trivially(
                new_shape, () if add else box_nodes(box)
            )
            return
        if not self.fully_occupied():
            raise ChangeRejected(
                "SwarmNotReady", "change detection requires a fully occupied shape"
            )
        old_shape = self.shape
        self.change_seq += 1
        rounds = self._flood_notice(box)
        self.event(
            "change_status",
            seq=self.change_seq,
            status=STATUS_PROPAGATING,
            box=box,
            add=add,
            method=method,
            flood_rounds=rounds,
        )

        # detection runs on pre-change robot state
        if add:
            strict = [
                r for r in self.in_shape() if agent.detect_inflection_add(r, box)
            ]
            if len(strict) == 1:
                pivot = strict[0]
            else:
                candidates = [
                    r for r in self.in_shape() if agent.attach_strip_plan(r, box)
                ]
                if not candidates:
                    raise ChangeRejected(
                        "SwarmNotReady", "no robot can lead into the new box yet"
                    )
                adj = agent.adjacent_nodes(box, old_shape)
                pivot = min(
                    candidates,
                    key=lambda r: (
                        sum(1 for n in adj if n in r.memory.node_set),
                        r.id,
                    ),
                )
                self.event("detection_fallback", seq=self.change_seq, robot=pivot.id)
            inflection = pivot.memory.current_node
            inflection_prev = None
            repair_start = inflection
            fill_target = next(
                t
                for t in box_nodes(box)
                if abs(t[0] - inflection[0]) + abs(t[1] - inflection[1]) == 1
            )
            fill_entry: Edge | None = (inflection, fill_target)
        else:
            pivots = [
                r for r in self.in_shape() if agent.detect_inflection_sub(r, box)
            ]
            starters = [
                r for r in self.in_shape() if agent.detect_repair_start_sub(r, box)
            ]
            if len(pivots) != 1 or len(starters) != 1:
                raise InvariantViolation(
                    f"subtraction detection not unique: pivots={[r.id for r in pivots]} "
                    f"starters={[r.id for r in starters]}",
                    self,
                )
            pivot = pivots[0]
            inflection = pivot.memory.current_node
            inflection_prev = pivot.memory.visited_nodes[-2]
            repair_start = starters[0].memory.current_node
            fill_entry = None

        self.active = ChangeState(
            seq=self.change_seq,
            add=add,
            box=box,
            method=method,
            status=STATUS_PRIMARY,
            old_shape=old_shape,
            new_shape=new_shape,
            inflection=inflection,
            inflection_prev=inflection_prev,
            repair_start=repair_start,
            fill_entry_edge=fill_entry,
            injected_at=self.step_index,
        )
        self.shape = new_shape
        removed = self.active.removed_nodes()
        for r in self.in_shape():
            r.shape = new_shape
        for n in removed:
            self.edge_map.pop(n, None)
        self.pending_delta = ShapeDelta(
            seq=self.change_seq,
            added=tuple(sorted(self.active.added_nodes())),
            removed=tuple(sorted(removed)),
        )
        self.event(
            "detection",
            seq=self.change_seq,
            inflection_robot=pivot.id,
            inflection=inflection,
            repair_start=repair_start,
        )
        self.event(
            "change_status", seq=self.change_seq, status=STATUS_PRIMARY,
        )
        self._plan_all()

    # --- planning ---------------------------------------------------------------

    def _plan_in_shape(self, r: RobotState) -> None:
        active = self.active
        if active is not None and active.status == STATUS_PRIMARY:
            action, edge = agent.primary_step(
                r, active.add, active.box, active.inflection, active.inflection_prev
            )
            r.held = action == "hold"
            if action == "hold":
                if edge is not None and edge != r.planned_edge:
                    r.planned_edge = edge
                    self.event("redirect", robot=r.id, edge=edge)
            else:
                r.planned_edge = edge
            return

        r.held = False
        if r.role is Role.PASS_BACK and r.planned_edge is not None:
            return  # committed to the inherited move
        r.planned_edge = agent.next_edge(r.memory, r.shape)

    def _plan_all(self) -> None:
        for r in self.in_shape():
            if r.held:
                continue  # frozen plan (possibly redirected at injection)
            self._plan_in_shape(r)
        self._resolve_conflicts()

    def _resolve_conflicts(self) -> None:
        active = self.active
        if (
            active is None
            or active.status != STATUS_SECONDARY
            or active.method != "movement"
        ):
            return
        change = next((r for r in self.in_shape() if r.role is Role.CHANGE), None)
        if change is None or change.planned_edge is None:
            return
        intent = ChangeRobotIntent(edge=change.planned_edge)
        w = change.node
        conflicts = [
            r
            for r in self.in_shape()
            if r.id != change.id
            and r.planned_edge is not None
            and r.planned_edge[1] == intent.edge[1]
            and max(abs(r.node[0] - w[0]), abs(r.node[1] - w[1])) <= 1
        ]
        if len(conflicts) > 1:
            raise InvariantViolation(
                f"multiple destination conflicts: {[r.id for r in conflicts]}", self
            )
        for r in conflicts:
            declined = r.planned_edge[1]
            agent.resolve_destination_conflict(w, intent, r)
            taken = r.planned_edge[1]
            # The robot leaving the node the swap hands over also heard the
            # exchange (it sits a grid corner away); it passes its move back
            # so the swapped robot keeps tracing the interim path.
            occ = self.occupancy.get(taken)
            if occ is not None and self.robots[occ].role is Role.NORMAL:
                self.robots[occ].role = Role.PASS_BACK
            self.event(
                "destination_swap",
                seq=active.seq,
                change_robot=change.id,
                neighbor=r.id,
                declined=declined,
                taken=taken,
            )

    # --- motion -------------------------------------------------------------------

    def _motion(self) -> list[tuple[RobotState, Node]]:
        moves: dict[int, Node] = {}
        exiting: list[int] = []
        out_leg0_free = not any(
            rt == "out" and leg == 0 for rt, leg in self.travel.values()
        )
        for r in self.in_shape():
            if r.held:
                continue
            if r.node == self.shape.exit and r.planned_edge is None:
                if out_leg0_free and not exiting:
                    exiting.append(r.id)
            elif r.planned_edge is not None:
                moves[r.id] = r.planned_edge[1]

        admit: int | None = self.staging[0] if self.staging else None

        changed = True
        while changed:
            changed = False
            for rid in sorted(moves):
                t = moves[rid]
                occupant = self.occupancy.get(t)
                if occupant is None or occupant in exiting or occupant in moves:
                    continue
                del moves[rid]
                changed = True
        blocker = self.occupancy.get(self.shape.entry)
        if admit is not None and blocker is not None:
            if blocker not in moves and blocker not in exiting:
                admit = None

        targets: dict[Node, int] = {}
        for rid, t in sorted(moves.items()):
            if t in targets:
                raise InvariantViolation(
                    f"robots {targets[t]} and {rid} both move onto {t}", self
                )
            targets[t] = rid
        if admit is not None and self.shape.entry in targets:
            raise InvariantViolation("admission collides with an in-shape move", self)

        # exiting robots vacate first so the exit node can be refilled this step
        for rid in exiting:
            del self.occupancy[self.robots[rid].node]
        moved: list[tuple[RobotState, Node]] = []
        for rid in sorted(moves):
            del self.occupancy[self.robots[rid].node]
        for rid in sorted(moves):
            r = self.robots[rid]
            src = r.node
            dst = moves[rid]
            self.occupancy[dst] = rid
            self.edge_map[src] = dst
            r.memory.record(dst)
            r.planned_edge = None
            moved.append((r, src))
        for rid in exiting:
            r = self.robots[rid]
            r.phase = Phase.TO_STATION
            self.travel[rid] = ("out", 0)
            r.memory = None
            r.planned_edge = None
            was_change = r.role is Role.CHANGE
            r.role = Role.NORMAL
            self.cycle_exits[rid] += 1
            self.event("exit", robot=rid)
            if self.pending_delta is not None and self.carrier is None:
                self.carrier = (rid, self.pending_delta)
                self.pending_delta = None
                self.event("delta_carried", robot=rid, seq=self.carrier[1].seq)
            if was_change:
                self._resolve_change()
        if admit is not None:
            rid = self.staging.popleft()
            r = self.robots[rid]
            r.phase = Phase.IN_SHAPE
            r.shape = self.shape  # doorstep sync with the swarm's shape list
            r.memory = MemoryState.fresh(self.shape.entry)
            r.role = Role.NORMAL
            r.planned_edge = None
            r.held = False
            self.occupancy[self.shape.entry] = rid
            self.event("enter", robot=rid)
        return moved

    # --- travel & station -------------------------------------------------------

    def _travel_positions(self) -> dict[int, tuple]:
        pos = {}
        for rid, (route, leg) in self.travel.items():
            way = (
                self.config.waypoints_out
                if route == "out"
                else self.config.waypoints_in
            )
            pos[rid] = tuple(way[leg])
        return pos

    def _travel_and_station(self) -> None:
        cfg = self.config
        current = self._travel_positions()
        proposals: dict[int, object] = {}
        for rid in sorted(self.travel):
            route, leg = self.travel[rid]
            way = cfg.waypoints_out if route == "out" else cfg.waypoints_in
            proposals[rid] = (route, leg + 1) if leg + 1 < len(way) else "arrive"

        def target_pos(rid):
            p = proposals[rid]
            if p == "arrive":
                return None
            route, leg = p
            way = cfg.waypoints_out if route == "out" else cfg.waypoints_in
            return tuple(way[leg])

        order = sorted(
            self.travel, key=lambda rid: (self.travel[rid][0] != "in", rid)
        )  # shape-bound robots move first; station-bound yield on conflict
        claimed: dict[tuple, int] = {}
        for rid in order:
            tp = target_pos(rid)
            if tp is None:
                continue
            stalled = [
                o
                for o, p in current.items()
                if o != rid and p == tp and proposals.get(o) == self.travel[o]
            ]
            if tp in claimed or stalled:
                if self.travel[rid][0] == "out":
                    proposals[rid] = self.travel[rid]
                    self.event("travel_yield", robot=rid)
                else:
                    raise InvariantViolation(
                        f"shape-bound robot {rid} blocked on a travel leg", self
                    )
            else:
                claimed[tp] = rid

        for rid in sorted(self.travel):
            p = proposals[rid]
            if p == "arrive":
                route, _ = self.travel.pop(rid)
                r = self.robots[rid]
                if route == "out":
                    r.phase = Phase.CHARGING
                    self.station.append(rid)
                    self.charge_left[rid] = cfg.charge_steps
                    self.event("station_arrive", robot=rid)
                    if len(self.station) > cfg.station_slots:
                        raise InvariantViolation(
                            f"station overflow: {len(self.station)} robots", self
                        )
                    if self.carrier is not None and self.carrier[0] == rid:
                        self._deliver_delta(self.carrier[1])
                        self.carrier = None
                else:
                    r.phase = Phase.QUEUED
                    self._fresh_staged.append(rid)
                    self.event("staged", robot=rid)
            else:
                self.travel[rid] = p

        for rid in self.station:
            if self.charge_left[rid] > 0:
                self.charge_left[rid] -= 1

        # FIFO release, paced so the entry keeps being fed one robot a step
        buffer_target = len(cfg.waypoints_in) + 2
        inbound = sum(1 for rt, _ in self.travel.values() if rt == "in")
        staged = len(self.staging) + len(self._fresh_staged)
        if (
            self.station
            and self.charge_left[self.station[0]] == 0
            and staged + inbound < buffer_target
        ):
            rid = self.station.popleft()
            del self.charge_left[rid]
            self.robots[rid].phase = Phase.TO_SHAPE
            self.travel[rid] = ("in", 0)
            self.event("station_depart", robot=rid)

    def _deliver_delta(self, delta: ShapeDelta) -> None:
        for r in self.robots.values():
            if r.phase is not Phase.IN_SHAPE:
                r.shape = self.shape
        self.event("delta_delivered", seq=delta.seq)

    # --- secondary changes ----------------------------------------------------

    def _primary_complete(self) -> bool:
        active = self.active
        if active is None or active.status != STATUS_PRIMARY:
            return False
        if active.add:
            return all(n in self.occupancy for n in active.added_nodes())
        return not any(n in self.occupancy for n in active.removed_nodes())

    def _begin_secondary(self) -> None:
        active = self.active
        active.status = STATUS_SECONDARY
        active.primary_done_at = self.step_index
        for r in self.in_shape():
            r.held = False

        if active.add and active.fill_entry_edge is not None:
            # fillers keep circling the new box clockwise; the robot on the
            # far lane leaves it along the entry edge's pair partner, closing
            # the loop the fill spliced into the path
            from .paths import spanning_pair_partner

            for n in sorted(active.added_nodes()):
                rid = self.occupancy.get(n)
                if rid is None:
                    raise InvariantViolation("fill completed with a gap", self)
                self.robots[rid].planned_edge = (n, cw_next(n))
            ret = spanning_pair_partner(active.fill_entry_edge)
            leader = self.occupancy.get(ret[0])
            self.robots[leader].planned_edge = ret

        active.interim_edges = self.effective_path_edges()
        self.event(
            "change_status",
            seq=active.seq,
            status=STATUS_SECONDARY,
            interim=sorted([list(a), list(b)] for a, b in active.interim_edges.items()),
        )

        starter_id = self.occupancy.get(active.repair_start)
        if starter_id is None:
            raise InvariantViolation(
                f"no robot at repair start {active.repair_start}", self
            )
        starter = self.robots[starter_id]

        if active.method == "comm":
            by_node = {r.node: r for r in self.in_shape()}
            m = agent.make_memory_message(starter)
            order = [starter.id]
            hops = 0
            while m is not None:
                hops += 1
                if hops > self.config.comm_rounds_per_step:
                    raise InvariantViolation("memory message failed to quiesce", self)
                recipient = by_node.get(m.target)
                if recipient is None:
                    raise InvariantViolation(
                        f"memory message addressed an empty node {m.target}", self
                    )
                if self.config.record_messages and self.trace is not None:
                    self.trace.message(self.step_index, "memory", recipient.id)
                m = agent.apply_memory_message(recipient, m)
                order.append(recipient.id)
            self.event("memory_message", seq=active.seq, order=order)
            self._resolve_change()
        else:
            marks = []
            touched = set(box_nodes(active.box)) | {
                nb for n in box_nodes(active.box) for nb in neighbors8(n)
            }
            for r in self.in_shape():
                if r.node in touched and r.node != active.repair_start:
                    r.role = Role.PASS_BACK
                    marks.append(r.id)
            starter.role = Role.CHANGE
            self.event(
                "change_robot",
                seq=active.seq,
                robot=starter.id,
                node=starter.node,
                pass_backs=sorted(marks),
            )

    def _resolve_change(self) -> None:
        active = self.active
        active.status = STATUS_RESOLVED
        active.resolved_at = self.step_index
        self.event("change_status", seq=active.seq, status=STATUS_RESOLVED)
        self.resolved_changes.append(active)
        self.active = None

    # --- pass-back delivery -----------------------------------------------------

    def _post_motion_messages(self, moved: list[tuple[RobotState, Node]]) -> None:
        active = self.active
        drain = (
            active is not None
            and active.status == STATUS_PRIMARY
            and not active.add
        )
        emissions: list[PassBackMessage] = []
        for r, _src in moved:
            if r.role is Role.PASS_BACK:
                emissions.append(agent.emit_passback(r))
            elif drain:
                mem = r.memory
                emissions.append(
                    PassBackMessage(
                        visited_nodes=tuple(mem.visited_nodes),
                        visited_boxes=tuple(mem.visited_boxes),
                        box_parent=tuple(mem.box_parent.items()),
                        edge=(mem.visited_nodes[-2], mem.current_node),
                        target=mem.visited_nodes[-2],
                    )
                )
        for m in sorted(emissions, key=lambda m: m.target):
            rid = self.occupancy.get(m.target)
            if rid is None:
                continue
            r = self.robots[rid]
            if self.config.record_messages and self.trace is not None:
                self.trace.message(self.step_index, "pass_back", rid)
            if drain:
                # follow-the-leader while the box empties: inherit history,
                # roles are assigned only once primary changes finish
                r.memory = MemoryState.from_nodes(list(m.visited_nodes[:-1]))
            else:
                agent.apply_passback(r, m)

    # --- main loop -----------------------------------------------------------

    def step(self) -> None:
        self._travel_and_station()
        moved = self._motion()
        self.staging.extend(self._fresh_staged)
        self._fresh_staged = []
        self._post_motion_messages(moved)
        if self._primary_complete():
            self._begin_secondary()
        self._plan_all()
        self._assert_invariants()
        if self.trace is not None:
            if self.config.record_messages:
                # clock-sync chatter: present for realism, carries no logic
                self.trace.message(self.step_index, "sync_tick", -1)
            self.trace.step_record(self)
        self.step_index += 1

    def _assert_invariants(self) -> None:
        in_shape = self.in_shape()
        if len(self.occupancy) != len(in_shape):
            raise InvariantViolation(
                f"{len(in_shape)} in-shape robots on {len(self.occupancy)} nodes", self
            )
        for r in in_shape:
            if self.occupancy.get(r.node) != r.id:
                raise InvariantViolation(f"occupancy desync at {r.node}", self)
        positions = list(self._travel_positions().values())
        if len(positions) != len(set(positions)):
            raise InvariantViolation("two robots share a travel waypoint", self)

    def run(self, steps: int) -> None:
        for _ in range(steps):
            self.step()

    def run_until(self, predicate, limit: int) -> int:
        """Step until ``predicate(self)``; returns steps taken."""
        for k in range(limit):
            if predicate(self):
                return k
            self.step()
        raise EngineError(f"predicate not reached within {limit} steps")
