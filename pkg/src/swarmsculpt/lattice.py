"""Integer lattice geometry: nodes, boxes, shape validity, periphery.

Nodes are integer grid points ``(x, y)`` with y pointing up.  The plane is
tiled by fixed 2x2 "boxes": box ``(i, j)`` covers the four nodes
``(2i, 2j), (2i+1, 2j), (2i, 2j+1), (2i+1, 2j+1)``.  All modules share the
single clockwise convention defined here: around a box center, clockwise
order is SW -> NW -> NE -> SE -> SW.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

Node = tuple[int, int]
Box = tuple[int, int]
Edge = tuple[Node, Node]

# Direction vectors in clockwise order starting north (y up).
NORTH = (0, 1)
EAST = (1, 0)
SOUTH = (0, -1)
WEST = (-1, 0)
CLOCKWISE_DIRS = (NORTH, EAST, SOUTH, WEST)


class ShapeError(ValueError):
    """A box set / entry / exit combination violates shape validity."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


@dataclass(frozen=True)
class GridSpec:
    """Physical scale of the lattice.  Informational except for comm range."""

    edge_length: float = 0.2

    @property
    def comm_range(self) -> float:
        # Reaches exactly the 8 surrounding lattice neighbors.
        return math.sqrt(2) * self.edge_length


def box_of(node: Node) -> Box:
    """The unique box containing a node (floor tiling, negatives included)."""
    return (node[0] // 2, node[1] // 2)


def box_nodes(box: Box) -> tuple[Node, Node, Node, Node]:
    i, j = box
    x, y = 2 * i, 2 * j
    return ((x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1))


def box_sides_adjacent(a: Box, b: Box) -> bool:
    """True iff two boxes share a full side on the fixed tiling."""
    return abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1


def neighbors4(node: Node) -> tuple[Node, Node, Node, Node]:
    x, y = node
    return ((x, y + 1), (x + 1, y), (x, y - 1), (x - 1, y))


def neighbors8(node: Node) -> tuple[Node, ...]:
    x, y = node
    return tuple(
        (x + dx, y + dy)
        for dx in (-1, 0, 1)
        for dy in (-1, 0, 1)
        if (dx, dy) != (0, 0)
    )


def cw_next(node: Node) -> Node:
    """Clockwise successor of a node around its own box center.

    Corner roles by parity: SW -> NW -> NE -> SE -> SW.
    """
    x, y = node
    sx, sy = x & 1, y & 1
    if (sx, sy) == (0, 0):  # SW
        return (x, y + 1)
    if (sx, sy) == (0, 1):  # NW
        return (x + 1, y)
    if (sx, sy) == (1, 1):  # NE
        return (x, y - 1)
    return (x - 1, y)  # SE


def cw_prev(node: Node) -> Node:
    x, y = node
    sx, sy = x & 1, y & 1
    if (sx, sy) == (0, 0):  # SW <- SE
        return (x + 1, y)
    if (sx, sy) == (0, 1):  # NW <- SW
        return (x, y - 1)
    if (sx, sy) == (1, 1):  # NE <- NW
        return (x - 1, y)
    return (x, y + 1)  # SE <- NE


def is_clockwise(edge: Edge) -> bool:
    """True iff a within-box edge advances the SW->NW->NE->SE order."""
    a, b = edge
    if box_of(a) != box_of(b):
        raise ValueError(f"CrossBoxEdge: {a}->{b} spans boxes")
    return cw_next(a) == b


def rotation_steps_cw(from_dir: Node, to_dir: Node) -> int:
    """Number of 90-degree clockwise turns taking one unit direction to another."""
    i = CLOCKWISE_DIRS.index(from_dir)
    j = CLOCKWISE_DIRS.index(to_dir)
    return (j - i) % 4


@dataclass(frozen=True)
class Shape:
    """A valid set of boxes with fixed entry/exit nodes.

    Construct through :func:`validate_shape`; the constructor trusts its
    arguments.  ``nodes`` is derived and cached.
    """

    boxes: frozenset[Box]
    entry: Node
    exit: Node
    nodes: frozenset[Node] = field(init=False, compare=False)

    def __post_init__(self):
        covered = frozenset(n for b in self.boxes for n in box_nodes(b))
        object.__setattr__(self, "nodes", covered)

    @property
    def box_count(self) -> int:
        return len(self.boxes)

    @property
    def root_box(self) -> Box:
        return box_of(self.entry)

    def broken_side_dir(self) -> Node:
        """Outward direction of the side holding the (absent) exit->entry edge.

        Entry and exit share one side of the root box; robots enter and leave
        the shape through that side, so the box across it is never in the
        shape.
        """
        ex, ey = self.entry
        xx, xy = self.exit
        i, j = self.root_box
        if ey == xy:
            return SOUTH if ey == 2 * j else NORTH
        return WEST if ex == 2 * i else EAST

    def entry_heading(self) -> Node:
        """Direction a robot is moving when it steps onto the entry node."""
        dx, dy = self.broken_side_dir()
        return (-dx, -dy)

    def contains(self, node: Node) -> bool:
        return node in self.nodes


def _connected(boxes: frozenset[Box]) -> bool:
    start = next(iter(boxes))
    seen = {start}
    stack = [start]
    while stack:
        i, j = stack.pop()
        for nb in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)):
            if nb in boxes and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == len(boxes)


def validate_shape(boxes, entry: Node, exit: Node) -> Shape:
    """Check shape validity rules and return a Shape, or raise ShapeError.

    Rules: non-empty; box adjacency (full-side sharing) connected; entry and
    exit lattice-adjacent periphery nodes of the same box with the clockwise
    edge from exit leading to entry; the box across the entry/exit side is
    not part of the shape (robots must be able to pass through that side).
    """
    boxes = frozenset(boxes)
    if not boxes:
        raise ShapeError("EmptyShape", "a shape needs at least one box")
    if not _connected(boxes):
        # Corner-only contact also lands here: on the fixed tiling boxes are
        # either side-adjacent or not adjacent at all.
        raise ShapeError("DisconnectedBoxes", "boxes must connect side-to-side")
    if box_of(entry) != box_of(exit):
        raise ShapeError("BadEntryExit", "entry and exit must share a box")
    if cw_next(exit) != entry:
        raise ShapeError(
            "BadEntryExit", "clockwise edge from exit must lead to entry"
        )
    if box_of(entry) not in boxes:
        raise ShapeError("BadEntryExit", "entry/exit box not in shape")
    shape = Shape(boxes=boxes, entry=entry, exit=exit)
    dx, dy = shape.broken_side_dir()
    i, j = shape.root_box
    if (i + dx, j + dy) in boxes:
        raise ShapeError(
            "BadEntryExit",
            "the box across the entry/exit side must lie outside the shape",
        )
    peri = periphery_nodes(shape)
    if entry not in peri or exit not in peri:
        raise ShapeError("BadEntryExit", "entry and exit must be periphery nodes")
    return shape


def periphery_nodes(shape: Shape) -> frozenset[Node]:
    """In-shape nodes with at least one of their 8 neighbors out of shape.

    The 8-neighborhood makes hole boundaries periphery as well.
    """
    return frozenset(
        n
        for n in shape.nodes
        if any(nb not in shape.nodes for nb in neighbors8(n))
    )
