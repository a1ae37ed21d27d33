import numpy as np
import pytest

from limitshape.errors import InvalidPolygon
from limitshape.geometry import (
    GradientPolygon,
    contains,
    gauge_excess,
    h_map,
    lozenge_triangle,
    project,
    radial_gauge,
    regular_polygon,
    signed_distance,
    square,
    support,
)


#support function of the square is the l1 norm and positively homogeneous
def test_square_support_and_gauge() -> None:
    n = square(1.0)
    assert support(n, (1.0, 0.0)) == pytest.approx(1.0)
    assert support(n, (1.0, 1.0)) == pytest.approx(2.0)
    assert support(n, (3.0, -2.0)) == pytest.approx(5.0)
    assert gauge_excess(n, (0.0, 0.0)) == pytest.approx(-1.0)
    assert gauge_excess(n, (1.5, 0.2)) == pytest.approx(0.5)
    assert contains(n, (1.0, 1.0))
    assert not contains(n, (1.0 + 1e-6, 0.0))


#membership is vectorised over leading axes
def test_contains_vectorised() -> None:
    n = lozenge_triangle()
    points = np.array([[0.2, 0.2], [0.6, 0.6], [-0.1, 0.0], [0.5, 0.5]])
    assert contains(n, points).tolist() == [True, False, False, True]


#clockwise input is reversed rather than rejected
def test_from_vertices_reorients_clockwise(caplog: pytest.LogCaptureFixture) -> None:
    n = GradientPolygon.from_vertices([(0, 0), (0, 1), (1, 0)])
    assert "clockwise" in caplog.text
    assert n.size == 3
    assert gauge_excess(n, (0.25, 0.25)) < 0


#non-convex and degenerate vertex lists are refused
@pytest.mark.parametrize(
    "vertices",
    [
        [(0, 0), (1, 0), (2, 0)],
        [(0, 0), (2, 0), (1, 0.2), (2, 2), (0, 2)],
        [(0, 0), (1, 0)],
        [(0, 0), (0, 0), (1, 1), (0, 1)],
    ],
)
def test_invalid_polygons(vertices) -> None:
    with pytest.raises(InvalidPolygon):
        GradientPolygon.from_vertices(vertices)


#an interior point on the boundary is refused
def test_interior_point_must_be_strictly_inside() -> None:
    with pytest.raises(InvalidPolygon):
        GradientPolygon.from_vertices([(0, 0), (1, 0), (0, 1)], interior_point=(0.5, 0.5))


#projection lands on the nearest boundary point; signed distance is negative inside
def test_project_and_signed_distance() -> None:
    n = square(1.0)
    assert project(n, (2.0, 0.0)).tolist() == [1.0, 0.0]
    assert project(n, (3.0, 4.0)).tolist() == [1.0, 1.0]
    assert project(n, (0.3, -0.4)).tolist() == [0.3, -0.4]
    assert signed_distance(n, (2.0, 0.0)) == pytest.approx(1.0)
    assert signed_distance(n, (0.5, 0.0)) == pytest.approx(-0.5)
    assert signed_distance(n, (1.0, 0.3)) == pytest.approx(0.0)


#the radial gauge is 0 at the interior point and 1 on every side
def test_radial_gauge_levels() -> None:
    n = regular_polygon(6, 2.0)
    assert radial_gauge(n, n.interior_point) == pytest.approx(0.0)
    for a, b in n.sides:
        assert radial_gauge(n, 0.3 * a + 0.7 * b) == pytest.approx(1.0)
        assert radial_gauge(n, 0.5 * (0.5 * a + 0.5 * b) + 0.5 * n.interior_point) == pytest.approx(0.5)


#H sends the whole boundary to the south pole and z0 to the north pole
def test_h_map_collapses_boundary() -> None:
    n = lozenge_triangle()
    boundary = np.array([[0.0, 0.0], [0.5, 0.0], [0.5, 0.5], [0.0, 0.7], [2.0, 2.0]])
    assert np.allclose(h_map(n, boundary), [0.0, 0.0, -1.0])
    assert np.allclose(h_map(n, n.interior_point), [0.0, 0.0, 1.0])
    inside = np.array([[0.2, 0.3], [0.1, 0.1]])
    assert np.allclose(np.linalg.norm(h_map(n, inside), axis=-1), 1.0)


#H is Lipschitz with the recorded constant on a fine sample
def test_h_map_lipschitz_bound() -> None:
    n = regular_polygon(5)
    rng = np.random.default_rng(3)
    p = rng.uniform(-1, 1, size=(4000, 2))
    q = p + rng.normal(scale=1e-3, size=p.shape)
    keep = contains(n, p) & contains(n, q)
    p, q = p[keep], q[keep]
    ratio = np.linalg.norm(h_map(n, p) - h_map(n, q), axis=-1) / np.linalg.norm(p - q, axis=-1)
    assert ratio.max() <= n.h_lipschitz


#insetting a square shrinks it uniformly
def test_inset_square() -> None:
    inner = square(1.0).inset(0.25)
    assert np.allclose(np.sort(np.abs(inner.vertices).ravel()), 0.75)
    with pytest.raises(InvalidPolygon):
        square(1.0).inset(1.0)


#the vertex bisector separates its vertex from the rest of the polygon
def test_vertex_bisector_points_inward() -> None:
    n = GradientPolygon.from_vertices([(0, 0), (3, 0), (4, 2), (1, 3)])
    for i in range(n.size):
        w = n.vertex_bisector(i)
        others = np.delete(n.vertices, i, axis=0) - n.vertices[i]
        assert np.all(others @ w > 0)
