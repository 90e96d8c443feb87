"""Per-robot decision rules and the messages robots exchange.

Everything here is local: a robot sees its own memory, its shape view, and
messages addressed to it.  The engine owns delivery, timing, and occupancy;
no function in this module inspects another robot's state except through a
message payload.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .lattice import (
    Box,
    Edge,
    Node,
    Shape,
    box_of,
    cw_next,
    neighbors4,
    rotation_steps_cw,
)


class NoLegalEdge(RuntimeError):
    """No rule produced a next edge: the robot's state is corrupted."""


class Role(Enum):
    NORMAL = "normal"
    PASS_BACK = "pass_back"
    CHANGE = "change"


class Phase(Enum):
    IN_SHAPE = "in_shape"
    TO_STATION = "to_station"
    CHARGING = "charging"
    TO_SHAPE = "to_shape"
    QUEUED = "queued"


@dataclass
class MemoryState:
    """One robot's traversal memory.

    ``visited_nodes`` ends with the robot's current node.  Box parents are
    built incrementally: a box's parent is the box the robot first crossed
    from.  Robots circulating a repair loop revisit nodes, so the node list
    may contain duplicates; membership checks use the set.
    """

    visited_nodes: list[Node]
    visited_boxes: list[Box]
    box_parent: dict[Box, Box]
    node_set: set[Node] = field(repr=False, default_factory=set)
    box_set: set[Box] = field(repr=False, default_factory=set)

    def __post_init__(self):
        if not self.node_set:
            self.node_set = set(self.visited_nodes)
        if not self.box_set:
            self.box_set = set(self.visited_boxes)

    @classmethod
    def fresh(cls, node: Node) -> "MemoryState":
        return cls([node], [box_of(node)], {})

    @classmethod
    def from_nodes(cls, nodes: list[Node]) -> "MemoryState":
        mem = cls([], [], {})
        for n in nodes:
            mem.record(n)
        return mem

    @property
    def current_node(self) -> Node:
        return self.visited_nodes[-1]

    @property
    def current_box(self) -> Box:
        return box_of(self.current_node)

    def record(self, node: Node) -> None:
        if self.visited_nodes:
            prev_box = self.current_box
        else:
            prev_box = None
        self.visited_nodes.append(node)
        self.node_set.add(node)
        b = box_of(node)
        if b not in self.box_set:
            self.visited_boxes.append(b)
            self.box_set.add(b)
            if prev_box is not None:
                self.box_parent[b] = prev_box

    def snapshot(self) -> "MemoryState":
        return MemoryState(
            list(self.visited_nodes),
            list(self.visited_boxes),
            dict(self.box_parent),
            set(self.node_set),
            set(self.box_set),
        )


@dataclass
class RobotState:
    id: int
    phase: Phase
    shape: Shape
    memory: MemoryState | None = None
    role: Role = Role.NORMAL
    planned_edge: Edge | None = None
    held: bool = False

    @property
    def node(self) -> Node | None:
        return self.memory.current_node if self.memory else None


# --- messages -------------------------------------------------------------


@dataclass(frozen=True)
class ChangeNotice:
    seq: int
    add: bool
    box: Box
    inflection: Node | None = None  # filled once detected
    inflection_prev: Node | None = None
    repair_start: Node | None = None


@dataclass(frozen=True)
class MemoryMessage:
    visited_nodes: tuple[Node, ...]
    visited_boxes: tuple[Box, ...]
    box_parent: tuple[tuple[Box, Box], ...]
    target: Node


@dataclass(frozen=True)
class PassBackMessage:
    visited_nodes: tuple[Node, ...]
    visited_boxes: tuple[Box, ...]
    box_parent: tuple[tuple[Box, Box], ...]
    edge: Edge  # the move the sender just made; the recipient repeats it
    target: Node


@dataclass(frozen=True)
class ChangeRobotIntent:
    edge: Edge


@dataclass(frozen=True)
class ShapeDelta:
    seq: int
    added: tuple[Node, ...]
    removed: tuple[Node, ...]


@dataclass(frozen=True)
class SyncTick:
    step: int


# --- default behavior -----------------------------------------------------


def incoming_heading(memory: MemoryState, shape: Shape) -> Node:
    """Unit direction of the robot's last move; entering robots head inward."""
    if len(memory.visited_nodes) < 2:
        return shape.entry_heading()
    (ax, ay), (bx, by) = memory.visited_nodes[-2], memory.visited_nodes[-1]
    return (bx - ax, by - ay)


def next_edge(memory: MemoryState, shape: Shape) -> Edge | None:
    """The default behavior: one edge choice from purely local state.

    Returns None at the exit node (leave the shape).  Priority: an edge into
    a box never visited, else the clockwise edge within the current box,
    else the edge back into the current box's parent.  When two edges lead
    to unvisited boxes, the one needing the smallest clockwise rotation from
    the incoming heading wins.
    """
    node = memory.current_node
    if node == shape.exit:
        return None
    candidates = [
        t
        for t in neighbors4(node)
        if t in shape.nodes and t not in memory.node_set
    ]
    # Rule 1: unvisited box
    fresh = [t for t in candidates if box_of(t) not in memory.box_set]
    if fresh:
        heading = incoming_heading(memory, shape)
        fresh.sort(
            key=lambda t: rotation_steps_cw(
                heading, (t[0] - node[0], t[1] - node[1])
            )
        )
        return (node, fresh[0])
    # Rule 2: clockwise within the current box
    cw = cw_next(node)
    if cw in candidates:
        return (node, cw)
    # Rule 3: back to the parent box
    parent = memory.box_parent.get(memory.current_box)
    if parent is not None:
        for t in candidates:
            if box_of(t) == parent:
                return (node, t)
    raise NoLegalEdge(f"no rule applies at {node}; memory corrupted")


def traverse(shape: Shape):
    """Run one robot from entry to exit; returns the Path it traces."""
    from .paths import Path

    memory = MemoryState.fresh(shape.entry)
    edges: dict[Node, Node] = {}
    while True:
        e = next_edge(memory, shape)
        if e is None:
            break
        edges[e[0]] = e[1]
        memory.record(e[1])
        if len(edges) > len(shape.nodes):
            raise NoLegalEdge("traversal failed to terminate")
    return Path(edges=edges, entry=shape.entry, exit=shape.exit)


# --- change detection -----------------------------------------------------


def adjacent_nodes(box: Box, shape: Shape) -> frozenset[Node]:
    """In-shape nodes orthogonally adjacent to any node of ``box``."""
    from .lattice import box_nodes

    own = set(box_nodes(box))
    return frozenset(
        nb
        for n in own
        for nb in neighbors4(n)
        if nb not in own and nb in shape.nodes
    )


def attach_strip_plan(robot: RobotState, box: Box) -> bool:
    """True iff the robot stands on an attach strip of ``box`` and plans the
    strip's own edge (the periphery edge a new box would merge into)."""
    if robot.planned_edge is None or robot.memory is None:
        return False
    u, v = robot.planned_edge
    if u != robot.memory.current_node or box_of(u) != box_of(v):
        return False
    adj = adjacent_nodes(box, robot.shape)
    return u in adj and v in adj


def detect_inflection_add(robot: RobotState, box: Box) -> bool:
    """Addition pivot: exactly one visited node adjacent to the new box and
    the planned move is the attach side's own periphery edge."""
    if robot.memory is None:
        return False
    adj = adjacent_nodes(box, robot.shape)
    if robot.memory.current_node not in adj:
        return False
    visited_adjacent = sum(1 for n in adj if n in robot.memory.node_set)
    return visited_adjacent == 1 and attach_strip_plan(robot, box)


def detect_inflection_sub(robot: RobotState, box: Box) -> bool:
    """Subtraction pivot: adjacent to the removed box, has visited all four
    of its nodes, and stepped out of it on the previous move."""
    from .lattice import box_nodes

    mem = robot.memory
    if mem is None or len(mem.visited_nodes) < 2:
        return False
    if mem.current_node not in adjacent_nodes(box, robot.shape):
        return False
    if any(n not in mem.node_set for n in box_nodes(box)):
        return False
    return box_of(mem.visited_nodes[-2]) == box


def detect_repair_start_sub(robot: RobotState, box: Box) -> bool:
    """Subtraction repair start: adjacent to the removed box, never inside
    it, and the pre-removal plan led into it."""
    from .lattice import box_nodes

    mem = robot.memory
    if mem is None or robot.planned_edge is None:
        return False
    if mem.current_node not in adjacent_nodes(box, robot.shape):
        return False
    if any(n in mem.node_set for n in box_nodes(box)):
        return False
    return box_of(robot.planned_edge[1]) == box


def primary_step(
    robot: RobotState,
    add: bool,
    box: Box,
    inflection: Node,
    inflection_prev: Node | None,
) -> tuple[str, Edge | None]:
    """One robot's action while primary changes run.

    Returns an action tag and an edge: ``fill`` (clockwise through the new
    box), ``wait`` (in the new box, next slot still occupied territory),
    ``drain`` (clockwise out of the removed box toward the pivot), ``move``
    (default behavior), ``hold`` (pause; the edge, when present, is the
    redirected clockwise plan replacing one aimed into the removed box).
    """
    from .lattice import box_nodes

    node = robot.memory.current_node
    nodes = box_nodes(box)
    if add:
        if node in nodes:
            nxt = cw_next(node)
            if nxt in robot.memory.node_set:
                return ("wait", None)
            return ("fill", (node, nxt))
        if node == inflection:
            return ("move", next_edge(robot.memory, robot.shape))
        if inflection in robot.memory.node_set:
            return ("hold", None)  # downstream robots wait out the fill
        return ("move", next_edge(robot.memory, robot.shape))
    if node in nodes:
        if node == inflection_prev:
            return ("drain", (node, inflection))
        return ("drain", (node, cw_next(node)))
    if inflection in robot.memory.node_set:
        return ("move", next_edge(robot.memory, robot.shape))
    if robot.planned_edge is not None and robot.planned_edge[1] in nodes:
        # a plan into the removed box bends to the clockwise edge instead
        return ("hold", (node, cw_next(node)))
    return ("hold", None)


# --- secondary-change messaging -------------------------------------------


def make_memory_message(robot: RobotState) -> MemoryMessage | None:
    """Start or continue the virtual traversal from this robot's memory."""
    e = next_edge(robot.memory, robot.shape)
    robot.planned_edge = e
    if e is None:
        return None
    mem = robot.memory
    return MemoryMessage(
        visited_nodes=tuple(mem.visited_nodes),
        visited_boxes=tuple(mem.visited_boxes),
        box_parent=tuple(mem.box_parent.items()),
        target=e[1],
    )


def apply_memory_message(robot: RobotState, m: MemoryMessage) -> MemoryMessage | None:
    """Adopt the virtual robot's past, then plan as if standing at its head.

    Returns the forwarded message, or None when this robot holds the exit.
    """
    node = robot.memory.current_node
    if m.target != node:
        raise ValueError(f"TargetMismatch: message for {m.target}, robot at {node}")
    mem = MemoryState(
        list(m.visited_nodes),
        list(m.visited_boxes),
        dict(m.box_parent),
    )
    mem.record(node)
    robot.memory = mem
    return make_memory_message(robot)


def emit_passback(robot: RobotState) -> PassBackMessage:
    """After moving, tell the robot now on our previous node to do the same.

    The emitted edge is the move just made; the memory snapshot lets the
    recipient rewrite its past to match ours up to that node.
    """
    mem = robot.memory
    prev = mem.visited_nodes[-2]
    edge = (prev, mem.current_node)
    robot.role = Role.NORMAL
    return PassBackMessage(
        visited_nodes=tuple(mem.visited_nodes),
        visited_boxes=tuple(mem.visited_boxes),
        box_parent=tuple(mem.box_parent.items()),
        edge=edge,
        target=prev,
    )


def apply_passback(robot: RobotState, m: PassBackMessage) -> None:
    """Inherit the sender's past and committed move; become a pass-back robot.

    The carried node list ends at the sender's new node; trimming it leaves
    a history ending exactly at this robot's position.
    """
    if robot.role is Role.CHANGE:
        return  # the change robot clears pass-back state by ignoring it
    node = robot.memory.current_node
    if m.target != node or m.edge[0] != node:
        raise ValueError(f"TargetMismatch: pass-back for {m.target}, robot at {node}")
    robot.memory = MemoryState.from_nodes(list(m.visited_nodes[:-1]))
    robot.planned_edge = m.edge
    robot.role = Role.PASS_BACK


def resolve_destination_conflict(
    change_node: Node, intent: ChangeRobotIntent, neighbor: RobotState
) -> bool:
    """Destination swap: the neighbor yields the contested node and takes the
    fourth corner of the 2x2 grid the three nodes define.  Returns True when
    a swap happened."""
    if neighbor.planned_edge is None or neighbor.role is Role.CHANGE:
        return False
    s, t = neighbor.planned_edge
    if t != intent.edge[1]:
        return False
    w = change_node
    assert abs(s[0] - w[0]) == 1 and abs(s[1] - w[1]) == 1, (
        f"NoPairedEdge: conflicting robots at {s} and {w} are not diagonal"
    )
    swapped = (w[0] + s[0] - t[0], w[1] + s[1] - t[1])
    neighbor.planned_edge = (s, swapped)
    neighbor.role = Role.PASS_BACK
    return True
