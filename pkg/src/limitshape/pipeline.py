"""Command pipelines: build the pieces a config names, run them, emit files."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Tuple

import numpy as np
import shapely
from scipy.spatial import Delaunay

from .artifacts import RunArtifacts, parse_field_csv
from .config import RunConfig
from .diagnostics import (
    CaccioppoliParams,
    Window,
    caccioppoli_bound,
    caccioppoli_energy,
    detect_facets,
    detect_jump_segments,
    flatness_measure,
    gradient_magnitude,
    gradient_modulus,
    h_continuity,
    tangent_sign_changes,
)
from .errors import ConfigError, MeshDegenerate, MeshMismatch
from .geometry import GradientPolygon, lozenge_triangle, regular_polygon, square
from .mesh import ScalarField, TriMesh, hexagon_mesh, polygon_mesh, rectangle_mesh
from .obstacles import BoundaryData, Obstacles, constant_data, hexagon_stepped_data, linear_data
from .report import format_curve, format_facets, format_jumps, format_solve_report
from .sampler import (
    LatticeRegion,
    enumerate_tilings,
    hexagon_region,
    init_tiling,
    macmahon_count,
    rescale_to_graph,
    sample_mean_height,
)
from .solver import Problem, SolveReport, Tolerances, solve
from .tension import (
    PenaltySchedule,
    TensionModel,
    build_penalized,
    convexity_modulus,
    legendre,
    legendre_identity_check,
    make_tension,
    tension_eval,
)

logger = logging.getLogger(__name__)


# Builders ---------------------------------------------------------------------


def build_polygon(config: RunConfig) -> GradientPolygon:
    section = config.section("polygon")
    match section["preset"]:
        case "square":
            return square(section["half_width"])
        case "lozenge":
            return lozenge_triangle()
        case "regular":
            return regular_polygon(section["sides"], section["radius"])
        case "custom":
            return GradientPolygon.from_vertices(section["vertices"], section["interior_point"])
    raise ConfigError(f"unknown polygon preset '{section['preset']}'")


def build_model(config: RunConfig, polygon: GradientPolygon) -> TensionModel:
    section = config.section("tension")
    return make_tension(section["model"], polygon, dict(section))


def build_mesh(config: RunConfig) -> TriMesh:
    domain = config.section("domain")
    resolution = config.get("mesh", "resolution")
    match domain["preset"]:
        case "rectangle":
            nx = max(1, int(round(resolution * domain["width"])))
            ny = max(1, int(round(resolution * domain["height"])))
            return rectangle_mesh(domain["width"], domain["height"], nx=nx, ny=ny, origin=domain["origin"])
        case "hexagon":
            a, b, c = domain["sides"]
            return hexagon_mesh(a, b, c, resolution)
        case "polygon":
            return polygon_mesh(domain["vertices"], 1.0 / resolution)
    raise ConfigError(f"unknown domain preset '{domain['preset']}'")


def build_boundary(config: RunConfig, mesh: TriMesh) -> BoundaryData:
    section = config.section("boundary")
    density = section["sample_density"] or 0.01
    match section["preset"]:
        case "zero":
            return constant_data(mesh.outline, 0.0, sample_density=density)
        case "constant":
            return constant_data(mesh.outline, section["value"], sample_density=density)
        case "linear":
            return linear_data(mesh.outline, section["slope"], section["constant"], sample_density=density)
        case "hexagon-stepped":
            a, b, c = config.get("domain", "sides")
            return hexagon_stepped_data(a, b, c, sample_density=density)
        case "explicit":
            return BoundaryData(np.asarray(section["polyline"]), np.asarray(section["values"]), sample_density=density)
    raise ConfigError(f"unknown boundary preset '{section['preset']}'")


def build_schedule(config: RunConfig) -> PenaltySchedule:
    return PenaltySchedule(**dict(config.section("penalty")))


def build_tolerances(config: RunConfig) -> Tolerances:
    return Tolerances(**dict(config.section("tolerances")))


#explicit regions are checked for a stepped extension before any run uses them
def build_region(config: RunConfig) -> LatticeRegion:
    section = config.section("sampler")
    kind, sides = section["region"]
    if kind == "hexagon":
        return hexagon_region(*sides, scale=section["scale"])
    heights = section["heights"]
    region = LatticeRegion(
        sites=np.asarray(section["sites"], dtype=np.int64),
        boundary=np.asarray([h is not None for h in heights]),
        boundary_heights=np.asarray([0 if h is None else h for h in heights], dtype=np.int64),
        scale=section["scale"] or 1.0,
        label="explicit",
    )
    init_tiling(region)
    return region


def build_problem(config: RunConfig) -> Problem:
    polygon = build_polygon(config)
    mesh = build_mesh(config)
    return Problem(mesh=mesh, model=build_model(config, polygon), data=build_boundary(config, mesh))


# Field comparison ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Comparison:
    l2: float
    linf: float
    nodes: np.ndarray
    first: np.ndarray
    second: np.ndarray

    def rows(self) -> List[Tuple[float, float, float, float, float]]:
        diff = self.first - self.second
        return [
            (float(x), float(y), float(a), float(b), float(d))
            for (x, y), a, b, d in zip(self.nodes, self.first, self.second, diff)
        ]


def _same_nodes(a: TriMesh, b: TriMesh) -> bool:
    return a is b or (a.nodes.shape == b.nodes.shape and np.allclose(a.nodes, b.nodes, rtol=0.0, atol=1e-12))


#lumped P1 mass: a third of every incident triangle's area
def nodal_weights(mesh: TriMesh) -> np.ndarray:
    return np.bincount(mesh.triangles.ravel(), weights=np.repeat(mesh.areas / 3.0, 3), minlength=mesh.node_count)


def compare(first: ScalarField, second: ScalarField) -> Comparison:
    """Area-weighted RMS and max nodal difference on the nodes of ``first``.

    ``second`` is interpolated onto those nodes when the meshes differ;
    MeshMismatch propagates when a node lies outside its mesh.
    """

    mesh = first.mesh
    other = second.values if _same_nodes(mesh, second.mesh) else second.interpolate(mesh.nodes)
    diff = first.values - other
    weights = nodal_weights(mesh)
    l2 = float(np.sqrt(np.sum(weights * diff * diff) / np.sum(weights)))
    linf = float(np.max(np.abs(diff)))
    return Comparison(l2=l2, linf=linf, nodes=mesh.nodes, first=first.values, second=other)


#field on scattered nodes: reuse `mesh` when the nodes match, else triangulate them
def field_from_nodes(nodes: np.ndarray, values: np.ndarray, mesh: TriMesh | None = None) -> ScalarField:
    if mesh is not None and mesh.nodes.shape == nodes.shape and np.allclose(mesh.nodes, nodes, rtol=0.0, atol=1e-12):
        return ScalarField(mesh, values)
    triangles = Delaunay(nodes).simplices
    p = nodes[triangles]
    cross = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
    scale = float(np.ptp(nodes, axis=0).max()) ** 2
    triangles = triangles[np.abs(cross) > 1e-12 * scale]
    cross = cross[np.abs(cross) > 1e-12 * scale]
    triangles = np.where((cross < 0)[:, None], triangles[:, [0, 2, 1]], triangles)
    hull = shapely.MultiPoint(nodes).convex_hull
    try:
        return ScalarField(TriMesh(nodes=nodes, triangles=triangles, outline=np.asarray(hull.exterior.coords)[:-1]), values)
    except MeshDegenerate as exc:
        raise MeshMismatch(f"cannot triangulate field nodes: {exc}") from None


def load_field(path: Path, mesh: TriMesh | None = None) -> ScalarField:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise MeshMismatch(f"cannot read field {path}: {exc.strerror or exc}") from None
    nodes, values = parse_field_csv(text)
    return field_from_nodes(nodes, values, mesh)


# Commands ---------------------------------------------------------------------


def _solve(config: RunConfig) -> Tuple[Problem, SolveReport]:
    problem = build_problem(config)
    report = solve(
        problem,
        schedule=build_schedule(config),
        tol=build_tolerances(config),
        init=config.get("solver", "init"),
        workers=config.workers,
    )
    return problem, report


def _metadata(config: RunConfig, problem: Problem) -> Dict[str, object]:
    return {
        "command": config.command,
        "mesh": problem.mesh.to_dict(),
        "polygon": problem.model.polygon.to_dict(),
        "tension": problem.model.describe(),
        "boundary": problem.data.to_dict(),
    }


def run_solve(config: RunConfig, artifacts: RunArtifacts) -> Dict[str, object]:
    problem, report = _solve(config)
    artifacts.write_field("field.csv", report.field)
    artifacts.write_field("lower.csv", report.lower)
    artifacts.write_field("upper.csv", report.upper)
    artifacts.write_text("solve_report.txt", format_solve_report(report))
    artifacts.write_json("metadata.json", _metadata(config, problem))
    if config.get("run", "raster"):
        size = config.get("run", "raster_size")
        artifacts.write_raster("field.pgm", report.field, size)
        artifacts.write_raster("gradient.pgm", gradient_magnitude(report.field), size)
    metrics: Dict[str, object] = {"nodes": problem.mesh.node_count, "mesh_size": problem.mesh.mesh_size}
    metrics.update(report.summary())
    return metrics


def run_obstacles(config: RunConfig, artifacts: RunArtifacts) -> Dict[str, object]:
    problem = build_problem(config)
    mesh = problem.mesh
    obstacles = Obstacles(problem.data, problem.model.polygon, density=min(problem.data.sample_density, mesh.mesh_size / 4.0))
    lower, upper = obstacles.fields(mesh)
    artifacts.write_field("lower.csv", lower)
    artifacts.write_field("upper.csv", upper)
    artifacts.write_json("metadata.json", _metadata(config, problem))
    if config.get("run", "raster"):
        artifacts.write_raster("lower.pgm", lower, config.get("run", "raster_size"))
        artifacts.write_raster("upper.pgm", upper, config.get("run", "raster_size"))
    gap = upper.values - lower.values
    return {
        "nodes": mesh.node_count,
        "admissible": obstacles.admissibility.valid,
        "min_slack": obstacles.admissibility.slack,
        "max_gap": float(gap.max()),
        "rigid_nodes": int(np.count_nonzero(gap <= 1e-10) - np.count_nonzero(mesh.boundary_mask)),
    }


def _sample(config: RunConfig):
    section = config.section("sampler")
    region = build_region(config)
    return sample_mean_height(
        region,
        burn_in=section["burn_in"],
        samples=section["samples"],
        thinning=section["thinning"],
        seed=config.seed,
        audit_every=section["audit_every"],
    )


def run_sample(config: RunConfig, artifacts: RunArtifacts) -> Dict[str, object]:
    mean = _sample(config)
    graph = rescale_to_graph(mean)
    artifacts.write_rows("sites.csv", ("i", "j", "mean_height"), mean.rows())
    artifacts.write_field("field.csv", graph)
    artifacts.write_json("metadata.json", mean.region.metadata())
    if config.get("run", "raster"):
        artifacts.write_raster("field.pgm", graph, config.get("run", "raster_size"))
    return {
        "region": mean.region.label,
        "free_sites": mean.region.free_count,
        "samples": mean.samples,
        "burn_in": mean.burn_in,
        "thinning": mean.thinning,
        "certified": mean.certified,
        "coalescence_sweep": mean.coalescence_sweep,
    }


#a field named by a compare/diagnose source: a solver run, a sampler run, or a CSV path
def _field_source(config: RunConfig, source: str, artifacts: RunArtifacts, prefix: str) -> ScalarField:
    if source == "solve":
        _, report = _solve(config)
        artifacts.write_field(f"{prefix}field.csv", report.field)
        return report.field
    if source == "sample":
        graph = rescale_to_graph(_sample(config))
        artifacts.write_field(f"{prefix}field.csv", graph)
        return graph
    return load_field(Path(source), build_mesh(config))


def run_compare(config: RunConfig, artifacts: RunArtifacts) -> Dict[str, object]:
    section = config.section("compare")
    first = _field_source(config, section["a"], artifacts, "a_")
    second = first if section["b"] == section["a"] else _field_source(config, section["b"], artifacts, "b_")
    result = compare(first, second)
    artifacts.write_rows("compare.csv", ("node_x", "node_y", "a", "b", "difference"), result.rows())
    return {"a": section["a"], "b": section["b"], "nodes": len(result.nodes), "l2": result.l2, "linf": result.linf}


def run_diagnose(config: RunConfig, artifacts: RunArtifacts) -> Dict[str, object]:
    section = config.section("diagnose")
    polygon = build_polygon(config)
    u = _field_source(config, section["field"], artifacts, "")
    facets = detect_facets(u, polygon, section["facet_tol"], chord_tol=section["chord_tol"])
    jumps = detect_jump_segments(u, polygon, section["jump_tol"])
    modulus = gradient_modulus(u, section["radii"])
    h_modulus = h_continuity(u, polygon, section["radii"])
    artifacts.write_text("facets.txt", format_facets(facets))
    artifacts.write_text("jumps.txt", format_jumps(jumps))
    artifacts.write_rows("gradient_modulus.csv", ("radius", "sup_diameter"), modulus)
    artifacts.write_rows("h_modulus.csv", ("radius", "sup_diameter"), h_modulus)
    artifacts.write_text("moduli.txt", format_curve("gradient", modulus) + format_curve("h", h_modulus))
    metrics: Dict[str, object] = {
        "facets": len(facets),
        "facets_passing": sum(1 for facet in facets if facet.passes),
        "jump_edges": len(jumps.jump_edges),
        "jump_segments": len(jumps.segments),
        "compliant_segments": len(jumps.compliant_segments),
        "lipschitz_bound": u.lipschitz_bound,
    }
    for radius, value in modulus:
        metrics[f"gradient_modulus.{radius:g}"] = value
    for radius, value in h_modulus:
        metrics[f"h_modulus.{radius:g}"] = value
    if section["window_center"] is not None:
        window = Window(tuple(section["window_center"]), section["window_radius"])
        params = CaccioppoliParams(tuple(section["direction"]), section["c0"], section["c1"], window)
        metrics["caccioppoli_energy"] = caccioppoli_energy(u, params)
        metrics["caccioppoli_bound"] = caccioppoli_bound(u, params)
        flatness = flatness_measure(u, u.gradients[window.triangles(u.mesh)].mean(axis=0), window)
        metrics.update({f"flatness.{key}": value for key, value in flatness.items()})
        if section["tangent_radius"] is not None:
            metrics["tangent_sign_changes"] = tangent_sign_changes(u, window.center, section["tangent_radius"])
    return metrics


def run_tension_eval(config: RunConfig, artifacts: RunArtifacts) -> Dict[str, object]:
    section = config.section("evaluate")
    polygon = build_polygon(config)
    model = build_model(config, polygon)
    points = np.asarray(section["points"], dtype=float)
    order = section["order"]
    header: List[str] = ["p_x", "p_y", "value"]
    if order >= 1:
        header += ["grad_x", "grad_y"]
    if order >= 2:
        header += ["hess_xx", "hess_xy", "hess_yy"]
    penalized = None
    if section["legendre"]:
        schedule = build_schedule(config)
        penalized = build_penalized(model, schedule.stages, schedule)
        header += ["conjugate", "fenchel_young_gap"]
    rows: List[List[float]] = []
    for p in points:
        result = tension_eval(model, p, order)
        row = [p[0], p[1], result.value]
        if order >= 1:
            row += list(result.gradient)
        if order >= 2:
            row += [result.hessian[0, 0], result.hessian[0, 1], result.hessian[1, 1]]
        if penalized is not None:
            row += [legendre(penalized, p)[0], legendre_identity_check(penalized, p)]
        rows.append(row)
    artifacts.write_rows("tension.csv", header, rows)
    artifacts.write_json("metadata.json", {"tension": model.describe(), "polygon": polygon.to_dict()})
    metrics: Dict[str, object] = {"model": model.describe()["model"], "points": len(points), "order": order}
    modulus = convexity_modulus(model, pairs=1000, seed=config.seed)
    metrics.update({f"convexity.{key}": value for key, value in modulus.items()})
    return metrics


def run_enumerate(config: RunConfig, artifacts: RunArtifacts) -> Dict[str, object]:
    region = build_region(config)
    count = enumerate_tilings(region, limit=config.get("enumerate", "limit"))
    kind, sides = config.get("sampler", "region")
    formula = macmahon_count(*sides) if kind == "hexagon" else None
    if formula is not None and count != formula:
        logger.warning("enumeration gave %d tilings, product formula %d", count, formula)
    artifacts.write_json("metadata.json", region.metadata())
    return {"region": region.label, "free_sites": region.free_count, "tilings": count, "product_formula": formula}


COMMAND_RUNNERS: Dict[str, Callable[[RunConfig, RunArtifacts], Dict[str, object]]] = {
    "solve": run_solve,
    "obstacles": run_obstacles,
    "sample": run_sample,
    "compare": run_compare,
    "diagnose": run_diagnose,
    "tension-eval": run_tension_eval,
    "enumerate": run_enumerate,
}


#runs the configured command; writes resolved config, outputs, summary and manifest
def run(config: RunConfig) -> Path:
    artifacts = RunArtifacts(config.out)
    artifacts.write_text("config.resolved.txt", config.to_text())
    logger.info("running %s (seed %d) into %s", config.command, config.seed, config.out)
    metrics: Dict[str, object] = {"command": config.command, "seed": config.seed}
    metrics.update(COMMAND_RUNNERS[config.command](config, artifacts))
    artifacts.write_summary(metrics)
    return artifacts.finish()


__all__ = [
    "COMMAND_RUNNERS",
    "Comparison",
    "build_boundary",
    "build_mesh",
    "build_model",
    "build_polygon",
    "build_problem",
    "build_region",
    "build_schedule",
    "build_tolerances",
    "compare",
    "field_from_nodes",
    "load_field",
    "nodal_weights",
    "run",
]
