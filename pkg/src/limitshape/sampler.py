"""Lozenge tilings as height functions: extensions, heat-bath dynamics, enumeration."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from shapely import union_all
from shapely.geometry import Polygon

from .errors import InadmissibleBoundary, LimitShapeError, TooLarge
from .lattice import (
    ALLOWED_INCREMENTS,
    BACKWARD,
    FORWARD,
    LOWER_BACKWARD,
    LOWER_FORWARD,
    RAISE_BACKWARD,
    RAISE_FORWARD,
    increment_ok,
    lattice_embedding,
)
from .mesh import ScalarField, TriMesh, in_lattice_hexagon

logger = logging.getLogger(__name__)

#exact enumeration refuses regions with more free sites than this
ENUMERATION_LIMIT = 30

#random draws are taken from the generator in batches of this many steps
DRAW_BATCH = 1 << 16


#finite set of lattice sites with fixed integer heights on its boundary sites
@dataclass(frozen=True, eq=False)
class LatticeRegion:
    sites: np.ndarray
    boundary: np.ndarray
    boundary_heights: np.ndarray
    scale: float = 1.0
    label: str = "explicit"

    def __post_init__(self) -> None:
        sites = np.asarray(self.sites, dtype=np.int64).reshape(-1, 2)
        boundary = np.asarray(self.boundary, dtype=bool).reshape(-1)
        heights = np.asarray(self.boundary_heights, dtype=np.int64).reshape(-1)
        if len(boundary) != len(sites) or len(heights) != len(sites):
            raise InadmissibleBoundary("sites, boundary flags and heights must have equal length")
        if len(np.unique(sites, axis=0)) != len(sites):
            raise InadmissibleBoundary("region lists a site twice")
        if self.scale <= 0:
            raise InadmissibleBoundary("lattice scale must be positive")
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "boundary", boundary)
        object.__setattr__(self, "boundary_heights", heights)
        lookup = self.index
        for k in np.flatnonzero(~boundary):
            i, j = sites[k]
            for di, dj in FORWARD + BACKWARD:
                if (i + di, j + dj) not in lookup:
                    raise InadmissibleBoundary(f"free site {(int(i), int(j))} has a neighbour outside the region")
        rows, cols = self.neighbour_pairs
        count, _ = connected_components(
            sparse.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(sites), len(sites))), directed=False
        )
        if count != 1:
            raise InadmissibleBoundary(f"region splits into {count} pieces")

    @property
    def index(self) -> Dict[Tuple[int, int], int]:
        return {(int(i), int(j)): k for k, (i, j) in enumerate(self.sites)}

    #forward-neighbour pairs (s, s + step) inside the region
    @property
    def neighbour_pairs(self) -> Tuple[np.ndarray, np.ndarray]:
        lookup = self.index
        rows, cols = [], []
        for k, (i, j) in enumerate(self.sites):
            for di, dj in FORWARD:
                other = lookup.get((int(i + di), int(j + dj)))
                if other is not None:
                    rows.append(k)
                    cols.append(other)
        return np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64)

    @property
    def free_sites(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary)

    @property
    def free_count(self) -> int:
        return int((~self.boundary).sum())

    def metadata(self) -> Dict[str, object]:
        embedding = lattice_embedding()
        return {
            "region": self.label,
            "sites": len(self.sites),
            "free_sites": self.free_count,
            "scale": self.scale,
            "graph_convention": "u(eps*(i, j)) = eps * g(i, j); N = triangle (0,0),(1,0),(0,1)",
            "embedding_basis_i": embedding["basis_i"],
            "embedding_basis_j": embedding["basis_j"],
        }


#boxed a x b x c hexagon; boundary heights are those of the empty and full rooms, which agree there
def hexagon_region(a: int, b: int, c: int, scale: Optional[float] = None) -> LatticeRegion:
    if min(a, b, c) < 0:
        raise InadmissibleBoundary("hexagon sides must be non-negative")
    i, j = np.meshgrid(np.arange(a + c + 1), np.arange(b + c + 1), indexing="xy")
    inside = in_lattice_hexagon(i, j, a, b, c)
    i, j = i[inside], j[inside]
    strict = (j > 0) & (i > 0) & (i < a + c) & (j < b + c) & (i - j < a) & (j - i < b)
    heights = np.maximum.reduce([np.zeros_like(i), i - a, j - b])
    side = max(a, b, c, 1)
    return LatticeRegion(
        sites=np.column_stack([i, j]),
        boundary=~strict,
        boundary_heights=np.where(strict, 0, heights),
        scale=1.0 / side if scale is None else scale,
        label=f"hexagon {a} {b} {c}",
    )


# Extensions -------------------------------------------------------------------


class _Layout:
    """Flat neighbour tables of a region for the inner loops."""

    def __init__(self, region: LatticeRegion) -> None:
        lookup = region.index
        self.region = region
        self.forward: List[Tuple[int, ...]] = []
        self.backward: List[Tuple[int, ...]] = []
        for i, j in region.sites.tolist():
            self.forward.append(tuple(lookup[(i + di, j + dj)] for di, dj in FORWARD if (i + di, j + dj) in lookup))
            self.backward.append(tuple(lookup[(i + di, j + dj)] for di, dj in BACKWARD if (i + di, j + dj) in lookup))
        self.free = region.free_sites.tolist()
        self.fixed: List[bool] = region.boundary.tolist()


#extremal height extension by relaxation of the neighbour bounds from the boundary
def _extension(region: LatticeRegion, maximal: bool) -> np.ndarray:
    rows, cols = region.neighbour_pairs
    free = ~region.boundary
    span = len(region.sites) + int(np.abs(region.boundary_heights[region.boundary]).max(initial=0)) + 1
    heights = np.where(free, span if maximal else -span, region.boundary_heights).astype(np.int64)
    lo, hi = ALLOWED_INCREMENTS[0], ALLOWED_INCREMENTS[-1]
    for _ in range(len(region.sites) + 1):
        if maximal:
            #g(s) <= g(s + d) - lo and g(s + d) <= g(s) + hi
            bound = np.full(len(heights), np.iinfo(np.int64).max)
            np.minimum.at(bound, rows, heights[cols] - lo)
            np.minimum.at(bound, cols, heights[rows] + hi)
            updated = np.where(free, np.minimum(heights, bound), heights)
        else:
            bound = np.full(len(heights), np.iinfo(np.int64).min)
            np.maximum.at(bound, rows, heights[cols] - hi)
            np.maximum.at(bound, cols, heights[rows] + lo)
            updated = np.where(free, np.maximum(heights, bound), heights)
        if np.array_equal(updated, heights):
            break
        heights = updated
    delta = heights[cols] - heights[rows]
    if not np.all((delta >= lo) & (delta <= hi)):
        bad = int(np.argmax(~((delta >= lo) & (delta <= hi))))
        site = region.sites[rows[bad]].tolist()
        raise InadmissibleBoundary(f"boundary heights admit no stepped surface (conflict at site {site})")
    return heights


# States and dynamics ----------------------------------------------------------


class TilingState:
    """Heights on every region site together with the flippable sets.

    ``can_raise[k]`` / ``can_lower[k]`` record whether free site k may move
    up / down by one; both are kept current across flips and can be
    rechecked from scratch with :meth:`audit`.
    """

    def __init__(self, region: LatticeRegion, heights: Sequence[int], layout: Optional[_Layout] = None) -> None:
        self.region = region
        self.layout = layout or _Layout(region)
        self.heights: List[int] = [int(h) for h in heights]
        self.can_raise: List[bool] = [False] * len(self.heights)
        self.can_lower: List[bool] = [False] * len(self.heights)
        for k in self.layout.free:
            self._refresh(k)

    def copy(self) -> "TilingState":
        return TilingState(self.region, self.heights, self.layout)

    def _refresh(self, k: int) -> None:
        h = self.heights
        here = h[k]
        forward = [h[t] - here for t in self.layout.forward[k]]
        backward = [here - h[t] for t in self.layout.backward[k]]
        self.can_raise[k] = all(d == RAISE_FORWARD for d in forward) and all(d == RAISE_BACKWARD for d in backward)
        self.can_lower[k] = all(d == LOWER_FORWARD for d in forward) and all(d == LOWER_BACKWARD for d in backward)

    #applies one heat-bath update: coin 1 raises if allowed, coin 0 lowers if allowed
    def update(self, k: int, coin: int) -> bool:
        if coin and self.can_raise[k]:
            self.heights[k] += 1
        elif not coin and self.can_lower[k]:
            self.heights[k] -= 1
        else:
            return False
        fixed = self.layout.fixed
        if not fixed[k]:
            self._refresh(k)
        for t in self.layout.forward[k] + self.layout.backward[k]:
            if not fixed[t]:
                self._refresh(t)
        return True

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.heights, dtype=np.int64)

    @property
    def flippable(self) -> List[int]:
        return [k for k in self.layout.free if self.can_raise[k] or self.can_lower[k]]

    def is_valid(self) -> bool:
        rows, cols = self.region.neighbour_pairs
        h = self.array
        ok = all(increment_ok(int(d)) for d in h[cols] - h[rows])
        return ok and np.array_equal(h[self.region.boundary], self.region.boundary_heights[self.region.boundary])

    #recomputes the flippable sets and compares them with the maintained ones
    def audit(self) -> bool:
        fresh = TilingState(self.region, self.heights, self.layout)
        return self.is_valid() and fresh.can_raise == self.can_raise and fresh.can_lower == self.can_lower


def init_tiling(region: LatticeRegion, mode: str = "minimal") -> TilingState:
    if mode not in ("minimal", "maximal"):
        raise ValueError(f"unknown extension mode '{mode}'")
    return TilingState(region, _extension(region, maximal=(mode == "maximal")))


#batched uniform (free site, coin) draws from a seeded generator
class StepStream:
    def __init__(self, rng: np.random.Generator, free: Sequence[int], batch: int = DRAW_BATCH) -> None:
        self.rng = rng
        self.free = np.asarray(free, dtype=np.int64)
        self.batch = batch
        self._sites: List[int] = []
        self._coins: List[int] = []
        self._cursor = 0

    def take(self, count: int) -> Tuple[List[int], List[int]]:
        sites: List[int] = []
        coins: List[int] = []
        while count > 0:
            if self._cursor >= len(self._sites):
                self._sites = self.free[self.rng.integers(0, len(self.free), size=self.batch)].tolist()
                self._coins = self.rng.integers(0, 2, size=self.batch).tolist()
                self._cursor = 0
            n = min(count, len(self._sites) - self._cursor)
            sites.extend(self._sites[self._cursor : self._cursor + n])
            coins.extend(self._coins[self._cursor : self._cursor + n])
            self._cursor += n
            count -= n
        return sites, coins


#single heat-bath step on a uniformly chosen free site; mutates and returns the state
def glauber_step(state: TilingState, rng: np.random.Generator) -> TilingState:
    free = state.layout.free
    if free:
        k = free[int(rng.integers(0, len(free)))]
        state.update(k, int(rng.integers(0, 2)))
    return state


def run_sweeps(state: TilingState, stream: StepStream, sweeps: int) -> TilingState:
    steps = sweeps * len(state.layout.free)
    if steps == 0:
        return state
    sites, coins = stream.take(steps)
    update = state.update
    for k, coin in zip(sites, coins):
        update(k, coin)
    return state


@dataclass(slots=True)
class SandwichResult:
    lower: TilingState
    upper: TilingState
    sweeps: int
    coalescence_sweep: Optional[int]

    @property
    def coalesced(self) -> bool:
        return self.coalescence_sweep is not None


#minimal and maximal chains driven by the same draws; reports the first sweep at which they agree
def coupled_sandwich(region: LatticeRegion, sweeps: int, seed: int = 0, rng: Optional[np.random.Generator] = None) -> SandwichResult:
    lower = init_tiling(region, "minimal")
    upper = TilingState(region, _extension(region, maximal=True), lower.layout)
    stream = StepStream(rng or np.random.default_rng(seed), lower.layout.free)
    n = len(lower.layout.free)
    coalesced_at: Optional[int] = 0 if lower.heights == upper.heights else None
    for sweep in range(1, sweeps + 1):
        if coalesced_at is not None:
            run_sweeps(lower, stream, sweeps - sweep + 1)
            upper = lower.copy()
            break
        sites, coins = stream.take(n)
        for k, coin in zip(sites, coins):
            lower.update(k, coin)
            upper.update(k, coin)
        if lower.heights == upper.heights:
            coalesced_at = sweep
            logger.debug("sandwich coalesced after %d sweeps", sweep)
    return SandwichResult(lower=lower, upper=upper, sweeps=sweeps, coalescence_sweep=coalesced_at)


@dataclass(frozen=True, eq=False)
class MeanHeight:
    region: LatticeRegion
    mean: np.ndarray
    samples: int
    burn_in: int
    thinning: int
    certified: bool
    coalescence_sweep: Optional[int]

    def rows(self) -> List[Tuple[int, int, float]]:
        return [(int(i), int(j), float(m)) for (i, j), m in zip(self.region.sites, self.mean)]


def default_burn_in(region: LatticeRegion) -> int:
    side = max(1, int(round(1.0 / region.scale)))
    return 2 * side * side


def sample_mean_height(
    region: LatticeRegion,
    burn_in: Optional[int] = None,
    samples: int = 50,
    thinning: int = 10,
    seed: int = 0,
    audit_every: int = 0,
) -> MeanHeight:
    """Average heights over `samples` states taken every `thinning` sweeps after burn-in.

    Burn-in runs the coupled minimal/maximal chains; the run is certified
    when they agree by the end of burn-in, and sampling continues from the
    coalesced chain.
    """

    burn_in = default_burn_in(region) if burn_in is None else burn_in
    rng = np.random.default_rng(seed)
    sandwich = coupled_sandwich(region, burn_in, rng=rng)
    if not sandwich.coalesced:
        logger.warning("sampler not certified: chains still apart after %d burn-in sweeps", burn_in)
    state = sandwich.lower
    stream = StepStream(rng, state.layout.free)
    total = np.zeros(len(region.sites))
    for sample in range(samples):
        run_sweeps(state, stream, thinning)
        total += state.array
        if audit_every and (sample + 1) % audit_every == 0 and not state.audit():
            raise LimitShapeError("flippable bookkeeping diverged from the heights")
    logger.info("sampled %d states (burn-in %d, thinning %d)", samples, burn_in, thinning)
    return MeanHeight(
        region=region,
        mean=total / max(samples, 1),
        samples=samples,
        burn_in=burn_in,
        thinning=thinning,
        certified=sandwich.coalesced,
        coalescence_sweep=sandwich.coalescence_sweep,
    )


# Enumeration ------------------------------------------------------------------


#exact count of height functions by depth-first extension in site order
def enumerate_tilings(region: LatticeRegion, limit: int = ENUMERATION_LIMIT, collect: bool = False):
    free = region.free_sites.tolist()
    if len(free) > limit:
        raise TooLarge(f"{len(free)} free sites exceed the enumeration limit {limit}")
    lo = _extension(region, maximal=False)
    hi = _extension(region, maximal=True)
    layout = _Layout(region)
    heights = lo.tolist()
    assigned = region.boundary.tolist()
    found: List[Tuple[int, ...]] = []
    count = 0

    def consistent(k: int) -> bool:
        here = heights[k]
        for t in layout.forward[k]:
            if assigned[t] and not increment_ok(heights[t] - here):
                return False
        for t in layout.backward[k]:
            if assigned[t] and not increment_ok(here - heights[t]):
                return False
        return True

    def extend(position: int) -> None:
        nonlocal count
        if position == len(free):
            count += 1
            if collect:
                found.append(tuple(heights[k] for k in free))
            return
        k = free[position]
        assigned[k] = True
        for value in range(int(lo[k]), int(hi[k]) + 1):
            heights[k] = value
            if consistent(k):
                extend(position + 1)
        assigned[k] = False

    extend(0)
    return (count, found) if collect else count


#boxed plane partitions: prod over the box of (i + j + k - 1) / (i + j + k - 2)
def macmahon_count(a: int, b: int, c: int) -> int:
    total = Fraction(1)
    for i in range(1, a + 1):
        for j in range(1, b + 1):
            for k in range(1, c + 1):
                total *= Fraction(i + j + k - 1, i + j + k - 2)
    return int(total)


# Graph rescaling ----------------------------------------------------------------


#triangulation of the region sites split along the DIAG direction, in lattice units
def region_mesh(region: LatticeRegion) -> TriMesh:
    lookup = region.index
    triangles = []
    for i, j in region.sites.tolist():
        a = lookup[(i, j)]
        right, diag, up = lookup.get((i + 1, j)), lookup.get((i + 1, j + 1)), lookup.get((i, j + 1))
        if right is not None and diag is not None:
            triangles.append((a, right, diag))
        if diag is not None and up is not None:
            triangles.append((a, diag, up))
    nodes = region.sites.astype(float) * region.scale
    return TriMesh(nodes=nodes, triangles=np.asarray(triangles, dtype=np.int64), outline=_outline(nodes, np.asarray(triangles)))


def _outline(nodes: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    shape = union_all([Polygon(nodes[t]) for t in triangles]).simplify(0.0)
    return np.asarray(shape.exterior.coords)[:-1]


#u(eps * s) = eps * mean height at s, interpolated to the target mesh
def rescale_to_graph(mean: MeanHeight, mesh: Optional[TriMesh] = None) -> ScalarField:
    region = mean.region
    source = ScalarField(region_mesh(region), region.scale * mean.mean)
    if mesh is None:
        return source
    return ScalarField(mesh, source.interpolate(mesh.nodes))


__all__ = [
    "ENUMERATION_LIMIT",
    "LatticeRegion",
    "MeanHeight",
    "SandwichResult",
    "StepStream",
    "TilingState",
    "coupled_sandwich",
    "default_burn_in",
    "enumerate_tilings",
    "glauber_step",
    "hexagon_region",
    "init_tiling",
    "macmahon_count",
    "region_mesh",
    "rescale_to_graph",
    "run_sweeps",
    "sample_mean_height",
]
