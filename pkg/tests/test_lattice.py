import math

import numpy as np
import pytest

from limitshape.lattice import BACKWARD, FORWARD, Direction, STEP, increment_ok, lattice_embedding


#forward and backward offsets pair up direction by direction
def test_neighbour_offsets() -> None:
    assert FORWARD == ((1, 0), (0, 1), (1, 1))
    assert all((a + c, b + d) == (0, 0) for (a, b), (c, d) in zip(FORWARD, BACKWARD))
    assert STEP[Direction.DIAG] == (1, 1)


#increments of a height function across one lattice step are 0 or 1
def test_increment_ok() -> None:
    assert increment_ok(0) and increment_ok(1)
    assert not increment_ok(-1)
    assert not increment_ok(2)


#projected cube edges have length sqrt(2/3) and meet at 120 degrees
def test_lattice_embedding() -> None:
    embedding = lattice_embedding()
    i = np.array(embedding["basis_i"])
    j = np.array(embedding["basis_j"])
    assert np.linalg.norm(i) == pytest.approx(math.sqrt(2.0 / 3.0))
    assert np.linalg.norm(j) == pytest.approx(math.sqrt(2.0 / 3.0))
    assert float(i @ j) / (np.linalg.norm(i) * np.linalg.norm(j)) == pytest.approx(-0.5)
