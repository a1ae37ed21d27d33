"""Lattice directions and the height rule shared by the sampler and the enumerator."""
from __future__ import annotations

import math
from enum import IntEnum
from typing import Dict, Tuple


#enumerates the three unit directions of the triangular lattice in (i, j) coordinates
class Direction(IntEnum):
    I = 0
    J = 1
    DIAG = 2


#site offset of each direction
STEP: Dict[Direction, Tuple[int, int]] = {
    Direction.I: (1, 0),
    Direction.J: (0, 1),
    Direction.DIAG: (1, 1),
}

#g(s + step) - g(s) must lie in this set for every direction
ALLOWED_INCREMENTS = (0, 1)

#a flip raising g(s) by one needs every forward difference at its top and every backward one at its bottom
RAISE_FORWARD = max(ALLOWED_INCREMENTS)
RAISE_BACKWARD = min(ALLOWED_INCREMENTS)
#and lowering mirrors it
LOWER_FORWARD = min(ALLOWED_INCREMENTS)
LOWER_BACKWARD = max(ALLOWED_INCREMENTS)

#the six neighbours of a site: forward offsets then backward offsets
FORWARD = tuple(STEP[d] for d in Direction)
BACKWARD = tuple((-di, -dj) for di, dj in FORWARD)


def increment_ok(delta: int) -> bool:
    return ALLOWED_INCREMENTS[0] <= delta <= ALLOWED_INCREMENTS[-1]


#planar images of lattice directions I and J: unit cube edges projected onto x + y + z = 0, 120 degrees apart
def lattice_embedding() -> Dict[str, Tuple[float, float]]:
    r2, r6 = math.sqrt(2.0), math.sqrt(6.0)
    return {
        "basis_i": (-1.0 / r2, -1.0 / r6),
        "basis_j": (1.0 / r2, -1.0 / r6),
    }


__all__ = [
    "ALLOWED_INCREMENTS",
    "BACKWARD",
    "Direction",
    "FORWARD",
    "LOWER_BACKWARD",
    "LOWER_FORWARD",
    "RAISE_BACKWARD",
    "RAISE_FORWARD",
    "STEP",
    "increment_ok",
    "lattice_embedding",
]
