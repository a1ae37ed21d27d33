from collections import Counter

import numpy as np
import pytest
from scipy.stats import chisquare

from limitshape.errors import InadmissibleBoundary, TooLarge
from limitshape.mesh import hexagon_mesh
from limitshape.obstacles import hexagon_stepped_data
from limitshape.sampler import (
    LatticeRegion,
    StepStream,
    TilingState,
    coupled_sandwich,
    default_burn_in,
    enumerate_tilings,
    glauber_step,
    hexagon_region,
    init_tiling,
    macmahon_count,
    region_mesh,
    rescale_to_graph,
    run_sweeps,
    sample_mean_height,
)


#boxed plane partitions counted by the product formula
def test_macmahon_count() -> None:
    assert macmahon_count(1, 1, 1) == 2
    assert macmahon_count(2, 2, 2) == 20
    assert macmahon_count(3, 3, 3) == 980
    assert macmahon_count(1, 2, 3) == 10
    assert macmahon_count(0, 4, 4) == 1


#exhaustive enumeration agrees with the product formula on small hexagons
@pytest.mark.parametrize("sides", [(1, 1, 1), (2, 2, 2), (2, 3, 1), (1, 2, 3)])
def test_enumeration_matches_product_formula(sides) -> None:
    assert enumerate_tilings(hexagon_region(*sides)) == macmahon_count(*sides)


#collected tilings are distinct valid height functions
def test_enumeration_collects_valid_states() -> None:
    region = hexagon_region(2, 2, 2)
    count, found = enumerate_tilings(region, collect=True)
    assert count == len(found) == len(set(found)) == 20
    free = region.free_sites
    for heights in found:
        full = region.boundary_heights.copy()
        full[free] = heights
        assert TilingState(region, full).is_valid()


#the centre height of the 2 x 2 x 2 box averages to 1 under the uniform measure
def test_centre_height_is_symmetric() -> None:
    region = hexagon_region(2, 2, 2)
    _, found = enumerate_tilings(region, collect=True)
    position = [tuple(site) for site in region.sites[region.free_sites].tolist()].index((2, 2))
    assert np.mean([heights[position] for heights in found]) == pytest.approx(1.0)


def test_enumeration_limit() -> None:
    with pytest.raises(TooLarge):
        enumerate_tilings(hexagon_region(4, 4, 4), limit=10)


#minimal and maximal extensions are valid and ordered
def test_extensions() -> None:
    region = hexagon_region(3, 2, 2)
    low = init_tiling(region, "minimal")
    high = init_tiling(region, "maximal")
    assert low.is_valid() and high.is_valid()
    assert np.all(low.array <= high.array)
    assert not np.array_equal(low.array, high.array)
    assert not any(low.can_lower[k] for k in low.layout.free)
    assert not any(high.can_raise[k] for k in high.layout.free)
    with pytest.raises(ValueError):
        init_tiling(region, "median")


#boundary heights that force a step of two admit no tiling
def test_inadmissible_boundary_heights() -> None:
    region = hexagon_region(1, 1, 1)
    heights = region.boundary_heights.copy()
    heights[-1] = 3
    with pytest.raises(InadmissibleBoundary):
        init_tiling(LatticeRegion(region.sites, region.boundary, heights))


#regions must list sites once and close every free site's neighbourhood
def test_region_validation() -> None:
    with pytest.raises(InadmissibleBoundary):
        LatticeRegion(np.array([(0, 0), (1, 0)]), np.array([False, True]), np.zeros(2))
    with pytest.raises(InadmissibleBoundary):
        LatticeRegion(np.array([(0, 0), (0, 0)]), np.array([True, True]), np.zeros(2))
    with pytest.raises(InadmissibleBoundary):
        LatticeRegion(np.array([(0, 0), (5, 5)]), np.array([True, True]), np.zeros(2))
    with pytest.raises(InadmissibleBoundary):
        hexagon_region(-1, 2, 2)


#draws do not depend on how they are split across calls
def test_step_stream_batches() -> None:
    free = [3, 5, 7]
    whole = StepStream(np.random.default_rng(11), free, batch=4).take(10)
    stream = StepStream(np.random.default_rng(11), free, batch=4)
    first = stream.take(3)
    second = stream.take(7)
    assert whole == (first[0] + second[0], first[1] + second[1])
    assert set(whole[0]) <= set(free)
    assert set(whole[1]) <= {0, 1}


#single steps and sweeps keep the heights valid and the flippable sets current
def test_dynamics_keep_state_valid() -> None:
    region = hexagon_region(3, 3, 2)
    state = init_tiling(region)
    rng = np.random.default_rng(5)
    for _ in range(200):
        glauber_step(state, rng)
    assert state.audit()
    run_sweeps(state, StepStream(rng, state.layout.free), 20)
    assert state.audit()
    assert state.flippable


#the coupled extreme chains meet and stay together
def test_coupled_sandwich_coalesces() -> None:
    result = coupled_sandwich(hexagon_region(2, 2, 2), sweeps=400, seed=1)
    assert result.coalesced
    assert result.coalescence_sweep >= 1
    assert result.lower.heights == result.upper.heights
    assert result.lower.is_valid()


#mean heights are reproducible from the seed and lie within the extensions
def test_mean_height_determinism() -> None:
    region = hexagon_region(3, 3, 3)
    first = sample_mean_height(region, burn_in=200, samples=20, thinning=2, seed=9, audit_every=5)
    second = sample_mean_height(region, burn_in=200, samples=20, thinning=2, seed=9)
    other = sample_mean_height(region, burn_in=200, samples=20, thinning=2, seed=10)
    assert np.array_equal(first.mean, second.mean)
    assert not np.array_equal(first.mean, other.mean)
    low = init_tiling(region, "minimal").array
    high = init_tiling(region, "maximal").array
    assert np.all(low <= first.mean) and np.all(first.mean <= high)
    assert first.certified
    assert len(first.rows()) == len(region.sites)
    assert default_burn_in(region) == 18


#the rescaled field carries the stepped boundary data of the unit hexagon
def test_rescaled_graph_boundary() -> None:
    region = hexagon_region(2, 2, 2)
    mean = sample_mean_height(region, burn_in=50, samples=5, thinning=1, seed=0)
    field = rescale_to_graph(mean)
    mesh = field.mesh
    assert mesh.area == pytest.approx(3.0)
    boundary = mesh.boundary_nodes
    expected = hexagon_stepped_data(1, 1, 1).evaluate(mesh.nodes[boundary])
    assert np.allclose(field.values[boundary], expected)
    target = hexagon_mesh(1, 1, 1, resolution=4)
    moved = rescale_to_graph(mean, target)
    assert moved.mesh is target
    assert np.allclose(moved.values[target.boundary_nodes], hexagon_stepped_data(1, 1, 1).evaluate(target.nodes[target.boundary_nodes]))


#region meshes cover the hexagon in lattice units times the scale
def test_region_mesh_area() -> None:
    mesh = region_mesh(hexagon_region(1, 1, 1, scale=1.0))
    assert mesh.node_count == 7
    assert mesh.triangle_count == 6
    assert mesh.area == pytest.approx(3.0)
    assert hexagon_region(2, 2, 2).metadata()["free_sites"] == 7


#visit frequencies of the 20 tilings of the 2 x 2 x 2 box are uniform
@pytest.mark.slow
def test_glauber_is_uniform() -> None:
    region = hexagon_region(2, 2, 2)
    _, tilings = enumerate_tilings(region, collect=True)
    state = init_tiling(region)
    stream = StepStream(np.random.default_rng(2024), state.layout.free)
    free = region.free_sites.tolist()
    run_sweeps(state, stream, 100)
    counts = Counter()
    for _ in range(40000):
        run_sweeps(state, stream, 5)
        counts[tuple(state.heights[k] for k in free)] += 1
    assert set(counts) == set(tilings)
    observed = [counts[t] for t in tilings]
    assert chisquare(observed).pvalue > 1e-3
