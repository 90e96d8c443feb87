"""Shared fixtures: small shapes with hand-derived canonical paths.

The expected node orders below come from hand-executing the assembly rules
(sweep order, pair merges) and are frozen here as golden values.
"""

import pytest

from swarmsculpt.lattice import validate_shape


def seq_to_edges(seq):
    return {a: b for a, b in zip(seq, seq[1:])}


@pytest.fixture(scope="session")
def unit_shape():
    return validate_shape({(0, 0)}, entry=(0, 0), exit=(1, 0))


@pytest.fixture(scope="session")
def ell_shape():
    return validate_shape({(0, 0), (1, 0), (0, 1)}, entry=(0, 0), exit=(1, 0))


# Hand-derived canonical visit order for the 3-box L.
ELL_ORDER = [
    (0, 0), (0, 1), (0, 2), (0, 3), (1, 3), (1, 2),
    (1, 1), (2, 1), (3, 1), (3, 0), (2, 0), (1, 0),
]


@pytest.fixture(scope="session")
def square_shape():
    return validate_shape(
        {(0, 0), (1, 0), (0, 1), (1, 1)}, entry=(0, 0), exit=(1, 0)
    )


# Hand-derived canonical visit order for the 2x2 square of boxes.
SQUARE_ORDER = [
    (0, 0), (0, 1), (0, 2), (0, 3), (1, 3), (2, 3), (3, 3), (3, 2),
    (3, 1), (3, 0), (2, 0), (2, 1), (2, 2), (1, 2), (1, 1), (1, 0),
]


@pytest.fixture(scope="session")
def six_box_shape():
    # Six boxes: a vertical bar of four with a two-box arm; the assembly
    # order exercises a node with two children added in one sweep.
    return validate_shape(
        {(0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 0)},
        entry=(0, 0),
        exit=(1, 0),
    )
