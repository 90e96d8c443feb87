import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmsculpt.paths import PathKind, classify_path
from swarmsculpt.planner import (
    CapExceeded,
    exhaustive_cycle,
    reference_path,
    reference_path_with_cost,
    spanning_tree,
)
from swarmsculpt.shapes import enumerate_box_sets, enumerate_shapes, random_shape

from conftest import ELL_ORDER, SQUARE_ORDER


def test_tree_of_unit_shape(unit_shape):
    tree = spanning_tree(unit_shape)
    assert tree.root == (0, 0)
    assert tree.order == ((0, 0),)
    assert tree.parent == {}


def test_six_box_tree_child_sweep(six_box_shape):
    # Box (0,1) gains two children in one expansion; sweeping from its
    # parent direction orders the straight-ahead box before the east one.
    tree = spanning_tree(six_box_shape)
    assert tree.root == (0, 0)
    assert tree.children[(0, 1)] == ((0, 2), (1, 1))
    assert tree.order == ((0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 0))
    assert tree.parent[(1, 0)] == (1, 1)


def test_ell_tree_pinned(ell_shape):
    # Hand-executed sweep: north child first, then east.
    tree = spanning_tree(ell_shape)
    assert tree.children[(0, 0)] == ((0, 1), (1, 0))
    assert tree.order == ((0, 0), (0, 1), (1, 0))


def test_reference_path_unit(unit_shape):
    p = reference_path(unit_shape)
    assert p.to_sequence() == [(0, 0), (0, 1), (1, 1), (1, 0)]


def test_reference_path_ell_golden(ell_shape):
    assert reference_path(ell_shape).to_sequence() == ELL_ORDER


def test_reference_path_square_golden(square_shape):
    assert reference_path(square_shape).to_sequence() == SQUARE_ORDER


def test_reference_path_six_box_visits_everything(six_box_shape):
    seq = reference_path(six_box_shape).to_sequence()
    assert len(seq) == 24
    assert set(seq) == set(six_box_shape.nodes)


def test_reference_is_deterministic(six_box_shape):
    a = reference_path(six_box_shape).edge_set()
    b = reference_path(six_box_shape).edge_set()
    assert a == b


def test_exhaustive_unit(unit_shape):
    p = exhaustive_cycle(unit_shape)
    assert p is not None
    assert len(p.to_sequence()) == 4


def test_exhaustive_ell_node_count(ell_shape):
    p = exhaustive_cycle(ell_shape)
    assert p is not None
    assert len(p.to_sequence()) == 12


def test_exhaustive_cap():
    rng = random.Random(7)
    big = random_shape(rng, 10)
    with pytest.raises(CapExceeded):
        exhaustive_cycle(big, cap=24)


def test_every_small_shape_has_reference_and_brute_cycle():
    # smoke version of the exhaustive acceptance run, up to 3 boxes
    count = 0
    for shape in enumerate_shapes(3):
        ref = classify_path(shape, reference_path(shape))
        assert ref.kind is PathKind.PREFERRED
        assert exhaustive_cycle(shape) is not None
        count += 1
    assert count > 20


def test_enumerate_box_set_counts():
    # fixed polyominoes by cell count: 1, 2, 6, 19, 63
    assert len(enumerate_box_sets(1)) == 1
    assert len(enumerate_box_sets(2)) == 3
    assert len(enumerate_box_sets(5)) == 1 + 2 + 6 + 19 + 63


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 12))
def test_reference_classifies_preferred(seed, n_boxes):
    shape = random_shape(random.Random(seed), n_boxes)
    cls = classify_path(shape, reference_path(shape))
    assert cls.kind is PathKind.PREFERRED


def test_cost_grows_with_boxes():
    rng = random.Random(3)
    small = random_shape(rng, 5)
    big = random_shape(rng, 50)
    _, c_small = reference_path_with_cost(small)
    _, c_big = reference_path_with_cost(big)
    assert c_big > c_small
