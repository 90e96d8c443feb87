"""Shape corpus helpers: seeded random growth and exhaustive enumeration."""

from __future__ import annotations

import random

from .lattice import Box, Node, Shape, box_nodes, cw_next, validate_shape


def _adjacent_boxes(box: Box):
    i, j = box
    return ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1))


def legal_entry_exits(boxes: frozenset[Box] | set[Box]) -> list[tuple[Node, Node]]:
    """All (entry, exit) pairs satisfying the shape rules for a box set.

    A pair is legal when the exit's clockwise successor is the entry and the
    box across the side holding both nodes is outside the shape (which also
    makes both nodes periphery).
    """
    pairs = []
    for box in sorted(boxes):
        i, j = box
        for exit_ in box_nodes(box):
            entry = cw_next(exit_)
            if entry[1] == exit_[1]:  # horizontal side
                across = (i, j - 1) if entry[1] == 2 * j else (i, j + 1)
            else:
                across = (i - 1, j) if entry[0] == 2 * i else (i + 1, j)
            if across not in boxes:
                pairs.append((entry, exit_))
    return pairs


def random_shape(rng: random.Random, n_boxes: int) -> Shape:
    """Grow a valid shape from a seed box; reproducible from the rng state.

    Growth picks uniformly among boxes side-adjacent to the current set
    (side-adjacent additions always preserve validity), then picks a legal
    entry/exit pair uniformly.
    """
    boxes = {(0, 0)}
    while len(boxes) < n_boxes:
        frontier = sorted(
            {nb for b in boxes for nb in _adjacent_boxes(b) if nb not in boxes}
        )
        boxes.add(rng.choice(frontier))
    entry, exit_ = rng.choice(legal_entry_exits(boxes))
    return validate_shape(boxes, entry=entry, exit=exit_)


def _canonical(boxes: frozenset[Box]) -> frozenset[Box]:
    mi = min(i for i, _ in boxes)
    mj = min(j for _, j in boxes)
    return frozenset((i - mi, j - mj) for i, j in boxes)


def enumerate_box_sets(max_boxes: int) -> list[frozenset[Box]]:
    """All connected box sets up to ``max_boxes``, canonical under translation."""
    current = {frozenset([(0, 0)])}
    out = list(current)
    for _ in range(max_boxes - 1):
        nxt: set[frozenset[Box]] = set()
        for shape in current:
            for b in shape:
                for nb in _adjacent_boxes(b):
                    if nb not in shape:
                        nxt.add(_canonical(shape | {nb}))
        out.extend(sorted(nxt, key=sorted))
        current = nxt
    return out


def enumerate_shapes(max_boxes: int):
    """Every valid shape (box set and entry/exit choice) up to a box count."""
    for boxes in enumerate_box_sets(max_boxes):
        for entry, exit_ in legal_entry_exits(boxes):
            yield validate_shape(boxes, entry=entry, exit=exit_)
