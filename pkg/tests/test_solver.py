import numpy as np
import pytest

from limitshape import solver
from limitshape.errors import ConfigError, Inadmissible, NonConvergence
from limitshape.geometry import lozenge_triangle, square
from limitshape.mesh import ScalarField, TriMesh, hexagon_mesh, rectangle_mesh
from limitshape.obstacles import BoundaryData, hexagon_stepped_data, linear_data
from limitshape.report import format_solve_report
from limitshape.solver import Problem, Tolerances, assemble_energy, constraint_violation, el_residual, solve
from limitshape.tension import LozengeTension, PenaltySchedule, QuadraticTension, build_penalized

UNIT_SQUARE = np.array([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])

#u = 0.4 x + 0.2 y - 0.9 x y on the unit square: harmonic, bilinear on every side
BILINEAR = BoundaryData(UNIT_SQUARE, np.array([0.0, 0.4, -0.3, 0.2]))


def _bilinear(points: np.ndarray) -> np.ndarray:
    x, y = points[:, 0], points[:, 1]
    return 0.4 * x + 0.2 * y - 0.9 * x * y


def _quadratic_problem(data: BoundaryData, nx: int = 8) -> Problem:
    return Problem(rectangle_mesh(1.0, 1.0, nx=nx), QuadraticTension(square(1.0)), data)


#affine boundary data is reproduced exactly by the minimiser
def test_linear_data_is_exact() -> None:
    slope = np.array([0.3, -0.2])
    problem = _quadratic_problem(linear_data(UNIT_SQUARE, slope, 0.1))
    report = solve(problem, PenaltySchedule(stages=2), Tolerances(boundary_layer=0.1))
    expected = problem.mesh.nodes @ slope + 0.1
    assert np.allclose(report.field.values, expected, atol=1e-7)
    assert np.allclose(report.field.gradients, slope, atol=1e-7)
    assert report.stages[-1].gauge_triangles > 0
    assert report.stages[-1].max_gauge_excess < 0


#a start on the affine interpolant needs no Newton step at all
def test_linear_init_converges_immediately() -> None:
    problem = _quadratic_problem(linear_data(UNIT_SQUARE, (0.3, -0.2)))
    report = solve(problem, PenaltySchedule(stages=1), init="linear")
    assert report.iterations == 0


#quadratic tension with gradients inside the constraint gives the discrete harmonic extension
def test_quadratic_tension_harmonic_extension() -> None:
    problem = _quadratic_problem(BILINEAR, nx=16)
    report = solve(problem, PenaltySchedule(stages=4, min_stages=4))
    assert len(report.stages) == 4
    assert np.allclose(report.field.values, _bilinear(problem.mesh.nodes), atol=5e-3)
    assert report.obstacle_overshoot() <= 0.0
    assert 0.0 <= report.summary()["sandwich_projection"] <= 5e-3
    assert report.el_residual_norm <= 1e-6


#the minimiser does not depend on the initial field
def test_unique_minimiser_from_both_obstacles() -> None:
    problem = _quadratic_problem(BILINEAR)
    schedule = PenaltySchedule(stages=3, min_stages=3)
    from_lower = solve(problem, schedule, init="lower")
    from_upper = solve(problem, schedule, init="upper")
    assert np.allclose(from_lower.field.values, from_upper.field.values, atol=1e-6)


#threaded assembly combines chunk sums in a fixed order
def test_workers_give_identical_fields(monkeypatch) -> None:
    monkeypatch.setattr(solver, "ASSEMBLY_CHUNK", 32)
    problem = _quadratic_problem(BILINEAR)
    schedule = PenaltySchedule(stages=2, min_stages=2)
    serial = solve(problem, schedule, workers=1)
    threaded = solve(problem, schedule, workers=3)
    assert np.array_equal(serial.field.values, threaded.field.values)
    assert serial.summary() == threaded.summary()


#energy history is recorded per stage and decreases within a stage
def test_stage_records() -> None:
    report = solve(_quadratic_problem(BILINEAR), PenaltySchedule(stages=2, min_stages=2))
    assert [stage.m for stage in report.stages] == [1, 2]
    for energies in report.energy_history:
        assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))
    summary = report.summary()
    assert summary["stages"] == 2
    assert "stage.2.energy" in summary
    assert "wall_time" not in summary


#hitting the iteration cap reports the stage
def test_iteration_cap_raises() -> None:
    with pytest.raises(NonConvergence) as excinfo:
        solve(_quadratic_problem(BILINEAR), PenaltySchedule(stages=1), Tolerances(kkt=1e-30, max_iterations=1))
    assert excinfo.value.stage == 1
    assert excinfo.value.exit_code == 3


#inadmissible data is refused before any assembly
def test_inadmissible_problem() -> None:
    with pytest.raises(Inadmissible):
        solve(_quadratic_problem(linear_data(UNIT_SQUARE, (2.0, 0.0))))


#invalid tolerances and initialisations are config errors
def test_bad_settings() -> None:
    with pytest.raises(ConfigError):
        Tolerances(constraint=0.0)
    with pytest.raises(ConfigError):
        Tolerances(max_iterations=0)
    with pytest.raises(ConfigError):
        solve(_quadratic_problem(BILINEAR), PenaltySchedule(stages=1), init="median")


#the residual vanishes on boundary nodes; the constraint check ignores the boundary layer
def test_residual_and_constraint_helpers() -> None:
    mesh = rectangle_mesh(1.0, 1.0, nx=8)
    polygon = square(1.0)
    u = ScalarField.from_function(mesh, _bilinear)
    residual = el_residual(u, build_penalized(QuadraticTension(polygon), 2))
    assert np.all(residual[mesh.boundary_nodes] == 0.0)
    steep = ScalarField.linear(mesh, (1.5, 0.0))
    check = constraint_violation(steep, polygon, boundary_layer=0.1)
    assert check.excess == pytest.approx(0.5)
    assert 0 < len(check.offending) <= check.evaluated


#a boundary layer that covers the mesh evaluates nothing and never passes the gauge test
def test_gauge_check_without_triangles(caplog: pytest.LogCaptureFixture) -> None:
    mesh = rectangle_mesh(1.0, 1.0, nx=8)
    check = constraint_violation(ScalarField.linear(mesh, (1.5, 0.0)), square(1.0))
    assert check.empty and check.excess is None and check.offending == []
    report = solve(_quadratic_problem(BILINEAR), PenaltySchedule(stages=3, min_stages=1))
    assert len(report.stages) == 3
    assert all(stage.max_gauge_excess is None for stage in report.stages)
    assert "no triangles evaluated" in caplog.text
    assert "max_gauge_excess=none (no triangles evaluated)" in format_solve_report(report)


#lozenge tension on the unit hexagon with stepped data: gauge excess shrinks along the continuation
@pytest.mark.slow
def test_hexagon_lozenge_continuation() -> None:
    problem = Problem(hexagon_mesh(1, 1, 1, resolution=24), LozengeTension(lozenge_triangle()), hexagon_stepped_data(1, 1, 1))
    report = solve(problem, PenaltySchedule(stages=8, min_stages=8))
    assert [stage.m for stage in report.stages] == list(range(1, 9))
    assert all(stage.gauge_triangles > 0 for stage in report.stages)
    excess = report.max_gauge_excess
    assert all(b <= a + 1e-9 for a, b in zip(excess, excess[1:]))
    assert excess[-1] <= 0.05
    assert report.obstacle_overshoot() <= 1e-8


#the lozenge minimiser on the hexagon is the same from a flat start and from the upper obstacle
@pytest.mark.slow
def test_hexagon_lozenge_unique_minimiser() -> None:
    problem = Problem(hexagon_mesh(1, 1, 1, resolution=16), LozengeTension(lozenge_triangle()), hexagon_stepped_data(1, 1, 1))
    schedule = PenaltySchedule(stages=6, min_stages=6)
    tol = Tolerances(kkt=1e-11)
    from_zero = solve(problem, schedule, tol, init="zero")
    from_upper = solve(problem, schedule, tol, init="upper")
    assert np.allclose(from_zero.field.values, from_upper.field.values, atol=1e-6)


#energy is the area-weighted tension of the element gradients; its nodal gradient matches finite differences
def test_assemble_energy() -> None:
    mesh = rectangle_mesh(1.0, 1.0, nx=4)
    model = build_penalized(QuadraticTension(square(1.0)), 2)
    linear = ScalarField.linear(mesh, (0.3, -0.2))
    energy, _ = assemble_energy(mesh, model, linear)
    assert energy == pytest.approx(model.evaluate((0.3, -0.2)).value[0])
    u = ScalarField.from_function(mesh, lambda x: 0.2 * x[:, 0] ** 2 - 0.1 * x[:, 1])
    _, nodal = assemble_energy(mesh, model, u)
    assert np.all(nodal[mesh.boundary_nodes] == 0.0)
    node = int(np.flatnonzero(~mesh.boundary_mask)[0])
    step = 1e-6
    bumped = [u.values.copy(), u.values.copy()]
    bumped[0][node] += step
    bumped[1][node] -= step
    plus, minus = (assemble_energy(mesh, model, u.with_values(v))[0] for v in bumped)
    assert nodal[node] == pytest.approx((plus - minus) / (2 * step), rel=1e-5, abs=1e-9)


#u = x + y^2 / 2 sampled on the sides is forced everywhere; pinned nodes stay out of the residual norm
def test_residual_norm_skips_pinned_nodes() -> None:
    ys = np.linspace(0.0, 1.0, 9)
    polyline = np.concatenate([[(0.0, 0.0)], np.column_stack([np.ones(9), ys]), np.column_stack([np.zeros(9), ys[::-1]])[:-1]])
    data = BoundaryData(polyline, polyline[:, 0] + 0.5 * polyline[:, 1] ** 2)
    problem = Problem(rectangle_mesh(1.0, 1.0, nx=8), QuadraticTension(square(1.0)), data)
    report = solve(problem, PenaltySchedule(stages=1))
    assert np.allclose(report.field.values, problem.mesh.nodes[:, 0] + 0.5 * problem.mesh.nodes[:, 1] ** 2, atol=1e-9)
    residual = el_residual(report.field, build_penalized(problem.model, 1))
    assert np.max(np.abs(residual)) > 1e-3
    assert report.el_residual_norm == 0.0


#translating the domain, shifting the data by a constant and turning everything by 180 degrees move the minimiser along
def test_solve_is_equivariant_under_rigid_motions() -> None:
    mesh = rectangle_mesh(1.0, 1.0, nx=8)
    model = QuadraticTension(square(1.0))
    schedule = PenaltySchedule(stages=3, min_stages=3)
    tol = Tolerances(kkt=1e-11)
    base = solve(Problem(mesh, model, BILINEAR), schedule, tol).field.values
    shift = np.array([2.5, -1.0])
    moved = TriMesh(nodes=mesh.nodes + shift, triangles=mesh.triangles, outline=mesh.outline + shift)
    moved_data = BoundaryData(BILINEAR.polyline + shift, BILINEAR.values + 0.7)
    assert np.allclose(solve(Problem(moved, model, moved_data), schedule, tol).field.values, base + 0.7, atol=1e-7)
    turned = TriMesh(nodes=-mesh.nodes, triangles=mesh.triangles, outline=-mesh.outline)
    turned_data = BoundaryData(-BILINEAR.polyline, BILINEAR.values)
    assert np.allclose(solve(Problem(turned, model, turned_data), schedule, tol).field.values, base, atol=1e-7)
