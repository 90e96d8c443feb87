"""Directed path algebra over shapes: merging, separation, classification.

A path is stored as a mapping from each source node to its single successor
(out-degree is at most 1), broken at the exit node.  Discontinuous paths
(several closed loops plus the entry/exit strand) use the same mapping, so
there is no node-sequence representation here.

Merging replaces a parallel-opposite pair of within-box edges that straddle
a box connection with the crossing pair (and separation is the inverse).
Both amount to swapping the two edges' targets.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .lattice import (
    Box,
    Edge,
    Node,
    Shape,
    box_of,
    box_sides_adjacent,
    cw_next,
    is_clockwise,
    periphery_nodes,
)


class PathOpError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


class PathKind(Enum):
    PREFERRED = "preferred"
    VALID = "valid"
    PSEUDO_VALID = "pseudo_valid"
    INVALID = "invalid"


@dataclass(frozen=True)
class PathClass:
    kind: PathKind
    sub_cycle_count: int = 0


@dataclass(frozen=True)
class Path:
    """Edges keyed by source node; entry has in-degree 0, exit out-degree 0."""

    edges: dict[Node, Node]
    entry: Node
    exit: Node

    def edge_set(self) -> frozenset[Edge]:
        return frozenset(self.edges.items())

    def successor(self, node: Node) -> Node | None:
        return self.edges.get(node)

    def to_sequence(self) -> list[Node]:
        """Node visit order entry..exit; fails on discontinuous paths."""
        seq = [self.entry]
        seen = {self.entry}
        node = self.entry
        while node != self.exit:
            node = self.edges.get(node)
            if node is None or node in seen:
                raise PathOpError("Discontinuous", "no single entry->exit strand")
            seq.append(node)
            seen.add(node)
        if len(seq) != len(self.edges) + 1:
            raise PathOpError("Discontinuous", "loops detached from the strand")
        return seq

    def replace(self, **changes) -> "Path":
        edges = changes.pop("edges", dict(self.edges))
        return Path(edges=edges, entry=self.entry, exit=self.exit, **changes)


def is_spanning(edge: Edge) -> bool:
    return box_of(edge[0]) != box_of(edge[1])


def edge_dir(edge: Edge) -> Node:
    (ax, ay), (bx, by) = edge
    return (bx - ax, by - ay)


def spanning_pair_partner(edge: Edge) -> Edge:
    """The unique opposite edge completing a spanning pair across one side.

    For a spanning edge a->b, the partner runs b+n -> a+n on the other lane
    of the shared box side, where n is the lane offset keeping both endpoints
    inside the two boxes.
    """
    a, b = edge
    dx, dy = edge_dir(edge)
    for n in ((dy, dx), (-dy, -dx)):  # perpendicular offsets
        a2 = (a[0] + n[0], a[1] + n[1])
        b2 = (b[0] + n[0], b[1] + n[1])
        if box_of(a2) == box_of(a) and box_of(b2) == box_of(b):
            return (b2, a2)
    raise AssertionError(f"no lane partner for spanning edge {edge}")


def nonspanning_pair_partner(edge: Edge, other_box: Box) -> Edge:
    """The opposite within-box edge across the connection toward other_box."""
    a, b = edge
    for n in ((0, 1), (0, -1), (1, 0), (-1, 0)):
        a2 = (a[0] + n[0], a[1] + n[1])
        b2 = (b[0] + n[0], b[1] + n[1])
        if box_of(a2) == other_box and box_of(b2) == other_box:
            return (b2, a2)
    raise AssertionError(f"{edge} has no parallel partner in box {other_box}")


def _pair_geometry_ok(e1: Edge, e2: Edge) -> bool:
    """Endpoints form a 2x2 grid and directions are opposite."""
    d1, d2 = edge_dir(e1), edge_dir(e2)
    if (d1[0] + d2[0], d1[1] + d2[1]) != (0, 0):
        return False
    nodes = {e1[0], e1[1], e2[0], e2[1]}
    if len(nodes) != 4:
        return False
    xs = {x for x, _ in nodes}
    ys = {y for _, y in nodes}
    return (
        len(xs) == 2
        and len(ys) == 2
        and max(xs) - min(xs) == 1
        and max(ys) - min(ys) == 1
    )


def merge_paths(path: Path, pair: tuple[Edge, Edge]) -> Path:
    """Swap a straddling non-spanning pair for the crossing spanning pair."""
    e1, e2 = pair
    for e in (e1, e2):
        if path.edges.get(e[0]) != e[1]:
            raise PathOpError("NotAMergeablePair", f"{e} not in path")
        if is_spanning(e):
            raise PathOpError("NotAMergeablePair", f"{e} already spanning")
    if box_of(e1[0]) == box_of(e2[0]) or not box_sides_adjacent(
        box_of(e1[0]), box_of(e2[0])
    ):
        raise PathOpError("NotAMergeablePair", "edges must sit in side-adjacent boxes")
    if not _pair_geometry_ok(e1, e2):
        raise PathOpError("NotAMergeablePair", "endpoints must form a 2x2 grid")
    edges = dict(path.edges)
    edges[e1[0]], edges[e2[0]] = e2[1], e1[1]
    return path.replace(edges=edges)


def separate_path(path: Path, pair: tuple[Edge, Edge]) -> Path:
    """Inverse of merge_paths: swap a spanning pair back to within-box edges."""
    e1, e2 = pair
    for e in (e1, e2):
        if path.edges.get(e[0]) != e[1]:
            raise PathOpError("NotASeparablePair", f"{e} not in path")
        if not is_spanning(e):
            raise PathOpError("NotASeparablePair", f"{e} not spanning")
    if spanning_pair_partner(e1) != e2:
        raise PathOpError("NotASeparablePair", "edges do not form a lane pair")
    edges = dict(path.edges)
    edges[e1[0]], edges[e2[0]] = e2[1], e1[1]
    return path.replace(edges=edges)


def unit_path(box: Box, entry: Node, exit: Node) -> Path:
    """Three clockwise edges through one box from entry to exit."""
    if box_of(entry) != box or box_of(exit) != box or cw_next(exit) != entry:
        raise PathOpError("BadEntryExit", f"{entry}/{exit} do not break box {box}")
    edges: dict[Node, Node] = {}
    node = entry
    for _ in range(3):
        edges[node] = cw_next(node)
        node = edges[node]
    assert node == exit
    return Path(edges=edges, entry=entry, exit=exit)


def unit_cycle_edges(box: Box) -> dict[Node, Node]:
    """All four clockwise edges of a box, as a closed loop."""
    i, j = box
    start = (2 * i, 2 * j)
    edges = {}
    node = start
    for _ in range(4):
        edges[node] = cw_next(node)
        node = edges[node]
    return edges


def classify_path(shape: Shape, path: Path, reference: Path | None = None) -> PathClass:
    """Classify a path over a shape.

    Invalid when coverage/degree constraints fail, a within-box edge runs
    counter-clockwise, or a spanning edge lacks its lane partner.  Otherwise
    the number of loops (counting the entry/exit strand closed by a virtual
    exit->entry edge) decides: one loop is at least valid, several are
    pseudo-valid.  A valid path equal to the reference construction is
    preferred; pass ``reference`` to skip recomputing it.
    """
    edges = path.edges
    if path.entry != shape.entry or path.exit != shape.exit:
        return PathClass(PathKind.INVALID)
    if set(edges) != shape.nodes - {shape.exit}:
        return PathClass(PathKind.INVALID)
    targets = list(edges.values())
    if set(targets) != shape.nodes - {shape.entry} or len(set(targets)) != len(targets):
        return PathClass(PathKind.INVALID)
    for a, b in edges.items():
        if b not in shape.nodes:
            return PathClass(PathKind.INVALID)
        if abs(a[0] - b[0]) + abs(a[1] - b[1]) != 1:
            return PathClass(PathKind.INVALID)
        if is_spanning((a, b)):
            partner = spanning_pair_partner((a, b))
            if edges.get(partner[0]) != partner[1]:
                return PathClass(PathKind.INVALID)
        elif not is_clockwise((a, b)):
            return PathClass(PathKind.INVALID)

    closed = dict(edges)
    closed[shape.exit] = shape.entry  # virtual closing edge, never materialized
    loops = 0
    seen: set[Node] = set()
    for start in closed:
        if start in seen:
            continue
        loops += 1
        node = start
        while node not in seen:
            seen.add(node)
            node = closed[node]
    if loops > 1:
        return PathClass(PathKind.PSEUDO_VALID, sub_cycle_count=loops)
    if reference is None:
        from .planner import reference_path  # local import to avoid a cycle

        reference = reference_path(shape)
    if path.edge_set() == reference.edge_set():
        return PathClass(PathKind.PREFERRED, sub_cycle_count=1)
    return PathClass(PathKind.VALID, sub_cycle_count=1)


def periphery_edges(shape: Shape, path: Path) -> frozenset[Edge]:
    """Non-spanning path edges joining two periphery nodes."""
    peri = periphery_nodes(shape)
    return frozenset(
        (a, b)
        for a, b in path.edges.items()
        if not is_spanning((a, b)) and a in peri and b in peri
    )
