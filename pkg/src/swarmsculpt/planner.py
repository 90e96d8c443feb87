"""Centralized path construction and small-scale exhaustive search.

The reference construction assembles the shape box by box in depth-first
order with clockwise tie-breaking, merging each new box's loop into the
growing path at its tree parent.  Agents never run this code; it serves as
the oracle the distributed rules are checked against.
"""

from __future__ import annotations

from dataclasses import dataclass

from .lattice import Box, Node, Shape, CLOCKWISE_DIRS
from .paths import Path, nonspanning_pair_partner, unit_cycle_edges, unit_path


@dataclass(frozen=True)
class BoxTree:
    root: Box
    parent: dict[Box, Box]
    children: dict[Box, tuple[Box, ...]]
    order: tuple[Box, ...]  # assembly order (depth-first preorder)

    def depth(self, box: Box) -> int:
        d = 0
        while box != self.root:
            box = self.parent[box]
            d += 1
        return d


def _rotate_cw(d: Node, steps: int) -> Node:
    i = CLOCKWISE_DIRS.index(d)
    return CLOCKWISE_DIRS[(i + steps) % 4]


def _sweep_order(start: Node) -> tuple[Node, ...]:
    return tuple(_rotate_cw(start, k) for k in range(4))


def spanning_tree(shape: Shape, _cost: list[int] | None = None) -> BoxTree:
    """Depth-first clockwise-priority spanning tree of the box adjacency graph.

    Frontier boxes at each expansion are ordered by sweeping a vector from
    the new box toward its parent clockwise (for the root: toward the
    entry/exit side, which always faces out of the shape).
    """
    root = shape.root_box
    added = {root}
    parent: dict[Box, Box] = {}
    children: dict[Box, list[Box]] = {root: []}
    order = [root]

    def candidates(box: Box, start_dir: Node) -> list[Box]:
        out = []
        for d in _sweep_order(start_dir):
            nb = (box[0] + d[0], box[1] + d[1])
            if _cost is not None:
                _cost[0] += 1
            if nb in shape.boxes and nb not in added:
                out.append(nb)
        return out

    stack: list[tuple[Box, list[Box], int]] = [
        (root, candidates(root, shape.broken_side_dir()), 0)
    ]
    while stack:
        box, cand, idx = stack[-1]
        while idx < len(cand) and cand[idx] in added:
            idx += 1
        if idx == len(cand):
            stack.pop()
            continue
        nxt = cand[idx]
        stack[-1] = (box, cand, idx + 1)
        added.add(nxt)
        parent[nxt] = box
        children[box].append(nxt)
        children[nxt] = []
        order.append(nxt)
        toward_parent = (box[0] - nxt[0], box[1] - nxt[1])
        stack.append((nxt, candidates(nxt, toward_parent), 0))

    return BoxTree(
        root=root,
        parent=parent,
        children={b: tuple(c) for b, c in children.items()},
        order=tuple(order),
    )


def _side_nodes(box: Box, toward: Box) -> tuple[Node, Node]:
    """The two nodes of ``box`` on its side facing the adjacent box."""
    i, j = box
    di, dj = toward[0] - i, toward[1] - j
    if di == 1:
        return ((2 * i + 1, 2 * j), (2 * i + 1, 2 * j + 1))
    if di == -1:
        return ((2 * i, 2 * j), (2 * i, 2 * j + 1))
    if dj == 1:
        return ((2 * i, 2 * j + 1), (2 * i + 1, 2 * j + 1))
    return ((2 * i, 2 * j), (2 * i + 1, 2 * j))


def reference_path_with_cost(shape: Shape) -> tuple[Path, int]:
    """Build the canonical path, returning an elementary-operation count."""
    cost = [0]
    tree = spanning_tree(shape, _cost=cost)
    edges = dict(unit_path(shape.root_box, shape.entry, shape.exit).edges)
    cost[0] += 4
    for box in tree.order[1:]:
        par = tree.parent[box]
        a, b = _side_nodes(par, box)
        if edges.get(a) == b:
            e1 = (a, b)
        elif edges.get(b) == a:
            e1 = (b, a)
        else:
            raise AssertionError(
                f"no periphery edge on the {par}-{box} side during assembly"
            )
        e2 = nonspanning_pair_partner(e1, box)
        edges.update(unit_cycle_edges(box))
        assert edges.get(e2[0]) == e2[1]
        edges[e1[0]], edges[e2[0]] = e2[1], e1[1]
        cost[0] += 8
    return Path(edges=edges, entry=shape.entry, exit=shape.exit), cost[0]


def reference_path(shape: Shape) -> Path:
    """The canonical path for a shape: linear in the number of boxes."""
    return reference_path_with_cost(shape)[0]


class CapExceeded(ValueError):
    pass


def exhaustive_cycle(shape: Shape, cap: int = 24) -> Path | None:
    """Backtracking search for any entry->exit path visiting every node.

    Independent of the reference construction; exponential, so capped.
    Returns None when no such path exists.
    """
    nodes = shape.nodes
    if len(nodes) > cap:
        raise CapExceeded(f"{len(nodes)} nodes exceeds cap {cap}")
    adj = {
        n: [m for m in ((n[0], n[1] + 1), (n[0] + 1, n[1]), (n[0], n[1] - 1), (n[0] - 1, n[1])) if m in nodes]
        for n in sorted(nodes)
    }
    total = len(nodes)
    seq = [shape.entry]
    visited = {shape.entry}

    def go(node: Node) -> bool:
        if len(seq) == total:
            return node == shape.exit
        for m in adj[node]:
            if m in visited or (m == shape.exit and len(seq) != total - 1):
                continue
            visited.add(m)
            seq.append(m)
            if go(m):
                return True
            visited.discard(m)
            seq.pop()
        return False

    if not go(shape.entry):
        return None
    edges = {a: b for a, b in zip(seq, seq[1:])}
    return Path(edges=edges, entry=shape.entry, exit=shape.exit)
