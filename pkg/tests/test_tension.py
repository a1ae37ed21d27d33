import math

import numpy as np
import pytest

from limitshape.errors import ConfigError, OutsideDomain, SingularPoint
from limitshape.geometry import gauge_excess, lozenge_triangle, square
from limitshape.lobachevsky import lobachevsky_quad
from limitshape.tension import (
    Disk,
    InsetRegion,
    LozengeTension,
    PenaltySchedule,
    QuadraticTension,
    SingularTension,
    build_penalized,
    convexity_modulus,
    hessian_bounds,
    legendre,
    legendre_identity_check,
    make_tension,
    tension_eval,
)


#lozenge tension at the barycenter equals -3 L(pi/3) / pi and is its minimum
def test_lozenge_barycenter_value() -> None:
    model = LozengeTension(lozenge_triangle())
    result = tension_eval(model, (1.0 / 3.0, 1.0 / 3.0), order=1)
    assert result.value == pytest.approx(-3.0 * lobachevsky_quad(math.pi / 3) / math.pi, abs=1e-9)
    assert result.value == pytest.approx(-0.32307, abs=1e-5)
    assert np.allclose(result.gradient, 0.0, atol=1e-12)


#the lozenge tension vanishes on the whole boundary of the triangle
def test_lozenge_vanishes_on_boundary() -> None:
    model = LozengeTension(lozenge_triangle())
    rng = np.random.default_rng(0)
    t = rng.uniform(size=1000)
    side = rng.integers(0, 3, size=1000)
    corners = model.polygon.vertices
    points = corners[side] + t[:, None] * (corners[(side + 1) % 3] - corners[side])
    values = model.evaluate(points, 0).value
    assert np.max(np.abs(values)) <= 1e-6


#proportions follow the (1 - s - t, s, t) convention
def test_lozenge_proportions() -> None:
    model = LozengeTension(lozenge_triangle())
    assert np.allclose(model.proportions((0.2, 0.5)), [0.3, 0.2, 0.5])


#midpoint convexity on random interior pairs
def test_lozenge_midpoint_convexity() -> None:
    model = LozengeTension(lozenge_triangle())
    rng = np.random.default_rng(1)
    pts = rng.uniform(size=(40000, 2))
    pts = pts[pts.sum(axis=1) < 1.0]
    p, q = pts[: len(pts) // 2], pts[len(pts) // 2 : 2 * (len(pts) // 2)]
    mid = model.evaluate(0.5 * (p + q), 0).value
    ends = 0.5 * (model.evaluate(p, 0).value + model.evaluate(q, 0).value)
    assert len(p) >= 9000
    assert np.all(mid <= ends + 1e-12)


#the analytic gradient and Hessian agree with finite differences
def test_lozenge_derivatives_match_finite_differences() -> None:
    model = LozengeTension(lozenge_triangle())
    p = np.array([0.2, 0.45])
    step = 1e-6
    result = tension_eval(model, p, order=2)
    for axis in range(2):
        e = np.zeros(2)
        e[axis] = step
        forward = tension_eval(model, p + e, order=1)
        backward = tension_eval(model, p - e, order=1)
        assert (forward.value - backward.value) / (2 * step) == pytest.approx(result.gradient[axis], abs=1e-5)
        assert np.allclose((forward.gradient - backward.gradient) / (2 * step), result.hessian[axis], atol=1e-5)
    assert np.all(np.linalg.eigvalsh(result.hessian) > 0)


#evaluation outside N, or derivatives on a non-smooth boundary, are refused
def test_outside_domain_errors() -> None:
    model = LozengeTension(lozenge_triangle())
    with pytest.raises(OutsideDomain):
        tension_eval(model, (0.8, 0.8))
    with pytest.raises(OutsideDomain):
        tension_eval(model, (0.5, 0.0), order=1)
    assert tension_eval(model, (0.5, 0.0), order=0).value == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ConfigError):
        tension_eval(model, (0.2, 0.2), order=3)


#the lozenge model needs a triangle; unknown model names are config errors
def test_model_construction_errors() -> None:
    with pytest.raises(ConfigError):
        LozengeTension(square())
    with pytest.raises(ConfigError):
        make_tension("bogus", square())
    with pytest.raises(ConfigError):
        SingularTension(square(), [(0.0, 0.0)], [1.0], [1.5])
    with pytest.raises(ConfigError):
        SingularTension(square(), [(1.0, 0.0)], [1.0], [0.5])


#Hessians are refused inside the singular radius
def test_singular_point_hessian_refused() -> None:
    model = make_tension(
        "custom-singular",
        square(),
        {"singular_points": [(0.0, 0.0)], "weights": [1.0], "exponents": [0.5], "singular_radius": 1e-3},
    )
    with pytest.raises(SingularPoint):
        tension_eval(model, (1e-4, 0.0), order=2)
    assert tension_eval(model, (1e-4, 0.0), order=1).value > 0
    with pytest.raises(SingularPoint):
        hessian_bounds(model, Disk(center=(0.0, 0.0), radius=0.1))
    low, high = hessian_bounds(model, Disk(center=(0.5, 0.5), radius=0.1))
    assert 0 < low <= high


#the quadratic Hessian bounds are exactly 2w
def test_quadratic_hessian_bounds() -> None:
    model = QuadraticTension(square(), weight=1.5)
    low, high = hessian_bounds(model, InsetRegion(model.polygon, 0.1))
    assert low == pytest.approx(3.0)
    assert high == pytest.approx(3.0)


#inset regions at different depths are drawn from one grid, deeper ones nested in shallower ones
def test_inset_regions_share_grid() -> None:
    polygon = lozenge_triangle()
    shallow = InsetRegion(polygon, 0.02).sample(900)
    deep = InsetRegion(polygon, 0.1).sample(900)
    assert 0 < len(deep) < len(shallow)
    assert {tuple(p) for p in deep.tolist()} <= {tuple(p) for p in shallow.tolist()}
    assert np.all(np.asarray(gauge_excess(polygon, deep)) <= -0.1)


#stage parameters follow C = 4^m, eps = 4^-m, rho = 2^-m dist(z0, dN)
def test_penalty_schedule() -> None:
    schedule = PenaltySchedule()
    model = build_penalized(QuadraticTension(square()), 3, schedule)
    assert model.penalty_weight == 64.0
    assert model.epsilon == pytest.approx(1.0 / 64.0)
    assert model.radius == pytest.approx(0.125)
    with pytest.raises(ConfigError):
        PenaltySchedule(min_stages=5, stages=3)
    with pytest.raises(ConfigError):
        build_penalized(QuadraticTension(square()), 0)


#ring averaging shifts a quadratic by w r^2 inside the inset polygon
def test_penalized_quadratic_inside() -> None:
    base = QuadraticTension(square(), weight=2.0, center=(0.1, -0.2))
    model = build_penalized(base, 2)
    p = np.array([[0.3, 0.1], [-0.5, 0.4]])
    expected = 2.0 * np.sum((p - base.center) ** 2, axis=1) + 2.0 * model.ring_radius**2 + model.epsilon * np.sum(p**2, axis=1)
    assert np.allclose(model.evaluate(p, 0).value, expected)


#F_m is finite and convex on the whole plane, including far outside N
def test_penalized_convex_everywhere() -> None:
    model = build_penalized(LozengeTension(lozenge_triangle()), 2)
    rng = np.random.default_rng(2)
    p = rng.uniform(-1.5, 2.5, size=(3000, 2))
    q = rng.uniform(-1.5, 2.5, size=(3000, 2))
    mid = model.evaluate(0.5 * (p + q), 0).value
    ends = 0.5 * (model.evaluate(p, 0).value + model.evaluate(q, 0).value)
    assert np.all(np.isfinite(ends))
    assert np.all(mid <= ends + 1e-9 * (1.0 + np.abs(ends)))


#outside the inset polygon the gradient is the derivative of the value
def test_penalized_gradient_outside_inset() -> None:
    model = build_penalized(QuadraticTension(square()), 1)
    step = 1e-6
    for p in (np.array([1.3, 0.2]), np.array([0.9, -0.95]), np.array([-0.8, 0.1])):
        result = model.evaluate(p, 1)
        for axis in range(2):
            e = np.zeros(2)
            e[axis] = step
            numeric = (model.evaluate(p + e, 0).value - model.evaluate(p - e, 0).value)[0] / (2 * step)
            assert numeric == pytest.approx(result.gradient[0, axis], abs=1e-5)


#a ring point landing on a singular point marks the Hessian declined
def test_penalized_declined_hessian() -> None:
    base = SingularTension(square(), [(0.0, 0.0)], [1.0], [0.5])
    model = build_penalized(base, 1)
    p = np.array([model.ring_radius, 0.0])
    result = model.evaluate(p, 2)
    assert result.declined[0]
    assert np.allclose(result.hessian[0], model.epsilon * np.eye(2))
    with pytest.raises(SingularPoint):
        tension_eval(model, p, order=2)


#Legendre transform of w|p|^2 is |q|^2 / 4w, attained at q / 2w
def test_legendre_of_unconstrained_quadratic() -> None:
    model = QuadraticTension(square(), weight=1.0, unconstrained=True)
    value, argmax = legendre(model, (1.0, -0.5))
    assert value == pytest.approx(0.3125, abs=1e-10)
    assert np.allclose(argmax, [0.5, -0.25])
    with pytest.raises(ConfigError):
        legendre(QuadraticTension(square()), (0.0, 0.0))


#Fenchel-Young holds with equality at the maximiser of the penalized lozenge model
def test_legendre_identity_on_penalized_model() -> None:
    model = build_penalized(LozengeTension(lozenge_triangle()), 2)
    for q in [(0.0, 0.0), (0.3, -0.2), (1.0, 1.0)]:
        assert legendre_identity_check(model, q) <= 1e-8


#the sampled convexity modulus is positive for strictly convex models
def test_convexity_modulus_positive() -> None:
    stats = convexity_modulus(LozengeTension(lozenge_triangle()), pairs=500, seed=4)
    assert stats["min_gap"] > 0
    assert stats["median_gap"] >= stats["min_gap"]
    assert stats["min_gap_over_distance_sq"] > 0


#sup over N of |F_m - F| shrinks at every stage
def test_penalized_family_converges_uniformly() -> None:
    model = LozengeTension(lozenge_triangle())
    points = InsetRegion(model.polygon, 0.0).sample(2500)
    exact = model.evaluate(points, 0).value
    gaps = [float(np.max(np.abs(build_penalized(model, m).evaluate(points, 0).value - exact))) for m in range(1, 9)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-3


#outside K_m the Hessian of F_m is bounded below by eps_m I
@pytest.mark.parametrize("m", [1, 3, 5])
def test_penalized_hessian_floor_outside_inset(m: int) -> None:
    model = build_penalized(LozengeTension(lozenge_triangle()), m)
    rng = np.random.default_rng(m)
    points = rng.uniform(-0.5, 1.5, size=(3000, 2))
    points = points[np.asarray(gauge_excess(model.inner, points)) > 0.0]
    assert len(points) > 1000
    eigenvalues = np.linalg.eigvalsh(model.evaluate(points, 2).hessian)
    assert eigenvalues.min() >= model.epsilon * (1.0 - 1e-9)


#value, gradient and Hessian of F_m agree with central differences wherever the Hessian is locally continuous
def test_penalized_derivatives_match_finite_differences() -> None:
    model = build_penalized(LozengeTension(lozenge_triangle()), 2)
    rng = np.random.default_rng(7)
    points = rng.uniform(-0.3, 1.3, size=(1000, 2))
    at = model.evaluate(points, 2)
    step = 1e-6
    wide = 1e-5
    checked = np.ones(len(points), dtype=bool)
    for axis in range(2):
        e = np.zeros(2)
        e[axis] = step
        numeric = (model.evaluate(points + e, 0).value - model.evaluate(points - e, 0).value) / (2 * step)
        assert np.allclose(numeric, at.gradient[:, axis], rtol=1e-6, atol=1e-6)
        e[axis] = wide
        forward = model.evaluate(points + e, 2)
        backward = model.evaluate(points - e, 2)
        scale = 1.0 + np.abs(at.hessian).max(axis=(1, 2))
        steady = np.maximum(
            np.abs(forward.hessian - at.hessian).max(axis=(1, 2)),
            np.abs(backward.hessian - at.hessian).max(axis=(1, 2)),
        ) <= 1e-3 * scale
        checked &= steady
        numeric = (forward.gradient - backward.gradient) / (2 * wide)
        error = np.abs(numeric - at.hessian[:, axis, :]).max(axis=1)
        assert np.all(error[steady] <= 1e-4 * scale[steady])
    assert checked.sum() >= 900


#the cached edge table finds the same tangent-plane envelope as a dense scan of the inset boundary
def test_envelope_matches_dense_scan() -> None:
    model = build_penalized(LozengeTension(lozenge_triangle()), 3)
    rng = np.random.default_rng(11)
    points = rng.uniform(0.0, 1.0, size=(4000, 2))
    points = points[(points.sum(axis=1) < 1.0) & (np.asarray(gauge_excess(model.inner, points)) > 1e-3)][:300]
    s = np.linspace(0.0, 1.0, 20001)
    best = np.full(len(points), -np.inf)
    for a, b in model.inner.sides:
        q = a + s[:, None] * (b - a)
        ring = model.evaluate(q, 1)
        value = ring.value - model.epsilon * np.einsum("ij,ij->i", q, q)
        gradient = ring.gradient - 2.0 * model.epsilon * q
        planes = (value - np.einsum("ij,ij->i", gradient, q))[None, :] + points @ gradient.T
        best = np.maximum(best, planes.max(axis=1))
    envelope = model.evaluate(points, 0).value - model.epsilon * np.einsum("ij,ij->i", points, points)
    assert len(points) > 100
    assert np.all(envelope >= best - 1e-10)
    assert np.all(envelope - best <= 1e-7)
