"""P1 energy assembly and damped Newton continuation over the penalized family."""
from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .errors import ConfigError, NonConvergence
from .geometry import MEMBERSHIP_TOL, GradientPolygon, gauge_excess
from .mesh import ScalarField, TriMesh
from .obstacles import BoundaryData, Obstacles
from .tension import PenalizedTension, PenaltySchedule, TensionModel, build_penalized

logger = logging.getLogger(__name__)

#triangles per assembly chunk; partial sums are combined in chunk order
ASSEMBLY_CHUNK = 4096

ARMIJO = 1e-4

INIT_CHOICES = ("lower", "upper", "zero", "linear")


@dataclass(frozen=True, slots=True)
class Tolerances:
    kkt: Optional[float] = None
    constraint: float = 5e-2
    energy: float = 1e-9
    boundary_layer: Optional[float] = None
    max_iterations: int = 200

    def __post_init__(self) -> None:
        if self.kkt is not None and self.kkt <= 0:
            raise ConfigError("tol.kkt must be positive")
        if self.constraint <= 0 or self.energy <= 0:
            raise ConfigError("tolerances must be positive")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be at least 1")

    def kkt_for(self, mesh: TriMesh) -> float:
        return 1e-8 * mesh.area if self.kkt is None else self.kkt

    #width d_K of the excluded boundary layer, 4h by default
    def layer_for(self, mesh: TriMesh) -> float:
        return 4.0 * mesh.mesh_size if self.boundary_layer is None else self.boundary_layer


@dataclass(frozen=True, eq=False)
class Problem:
    mesh: TriMesh
    model: TensionModel
    data: BoundaryData


#per-stage record of the continuation
@dataclass(slots=True)
class StageRecord:
    m: int
    energies: List[float] = field(default_factory=list)
    gradient_norms: List[float] = field(default_factory=list)
    max_gauge_excess: Optional[float] = None
    gauge_triangles: int = 0

    @property
    def iterations(self) -> int:
        return max(len(self.energies) - 1, 0)


@dataclass(frozen=True, eq=False)
class SolveReport:
    field: ScalarField
    stages: List[StageRecord]
    el_residual_norm: float
    wall_time: float
    lower: Optional[ScalarField] = None
    upper: Optional[ScalarField] = None
    sandwich_projection: float = 0.0

    @property
    def energy_history(self) -> List[List[float]]:
        return [stage.energies for stage in self.stages]

    @property
    def max_gauge_excess(self) -> List[Optional[float]]:
        return [stage.max_gauge_excess for stage in self.stages]

    @property
    def iterations(self) -> int:
        return sum(stage.iterations for stage in self.stages)

    @property
    def final_energy(self) -> float:
        return self.stages[-1].energies[-1]

    #nodewise overshoot of the obstacle sandwich (<= 0 when lower <= u <= upper)
    def obstacle_overshoot(self) -> float:
        if self.lower is None or self.upper is None:
            return float("nan")
        u = self.field.values
        return float(max(np.max(self.lower.values - u), np.max(u - self.upper.values)))

    #key/value metrics in a fixed order; wall time stays out
    def summary(self) -> Dict[str, object]:
        out: Dict[str, object] = {
            "stages": len(self.stages),
            "iterations": self.iterations,
            "final_energy": self.final_energy,
            "el_residual_norm": self.el_residual_norm,
            "final_max_gauge_excess": self.stages[-1].max_gauge_excess,
            "final_gauge_triangles": self.stages[-1].gauge_triangles,
            "lipschitz_bound": self.field.lipschitz_bound,
            "obstacle_overshoot": self.obstacle_overshoot(),
            "sandwich_projection": self.sandwich_projection,
        }
        for stage in self.stages:
            out[f"stage.{stage.m}.iterations"] = stage.iterations
            out[f"stage.{stage.m}.energy"] = stage.energies[-1]
            out[f"stage.{stage.m}.max_gauge_excess"] = stage.max_gauge_excess
        return out


# Assembly ---------------------------------------------------------------------


def _chunk_terms(mesh: TriMesh, model: PenalizedTension, gradients: np.ndarray, bounds: Tuple[int, int], order: int):
    lo, hi = bounds
    evaluation = model.evaluate(gradients[lo:hi], order)
    areas = mesh.areas[lo:hi]
    energy = float(np.sum(areas * evaluation.value))
    flux = areas[:, None] * evaluation.gradient if order >= 1 else None
    blocks = areas[:, None, None] * evaluation.hessian if order >= 2 else None
    return energy, flux, blocks


#energy, full nodal gradient and (optionally) the 2t x 2t block-diagonal integrand Hessian
def _assemble(mesh: TriMesh, model: PenalizedTension, values: np.ndarray, order: int, workers: int = 1):
    gradients = (mesh.gradient_operator @ values).reshape(-1, 2)
    bounds = [(lo, min(lo + ASSEMBLY_CHUNK, mesh.triangle_count)) for lo in range(0, mesh.triangle_count, ASSEMBLY_CHUNK)]
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _chunk_terms(mesh, model, gradients, b, order), bounds))
    else:
        parts = [_chunk_terms(mesh, model, gradients, b, order) for b in bounds]
    energy = float(np.sum([part[0] for part in parts]))
    nodal = None
    if order >= 1:
        flux = np.concatenate([part[1] for part in parts])
        nodal = mesh.gradient_operator.T @ flux.ravel()
    blocks = np.concatenate([part[2] for part in parts]) if order >= 2 else None
    return energy, nodal, blocks


def _block_diagonal(blocks: np.ndarray) -> sparse.csr_matrix:
    count = len(blocks)
    return sparse.bsr_matrix((blocks, np.arange(count), np.arange(count + 1)), shape=(2 * count, 2 * count)).tocsr()


#discrete energy sum_T area(T) F_m(grad u|_T) and its derivative in the interior nodal values
def assemble_energy(mesh: TriMesh, model: PenalizedTension, u: ScalarField, workers: int = 1) -> Tuple[float, np.ndarray]:
    energy, nodal, _ = _assemble(mesh, model, u.values, 1, workers)
    nodal = nodal.copy()
    nodal[mesh.boundary_nodes] = 0.0
    return energy, nodal


#weak-form residual sum_T area(T) grad F_m(grad u|_T) . grad(hat_node); zero on boundary nodes
def el_residual(u: ScalarField, model: PenalizedTension, workers: int = 1) -> np.ndarray:
    return assemble_energy(u.mesh, model, u, workers)[1]


#gauge check on the triangles whose centroid clears the boundary layer; excess is None when none do
@dataclass(frozen=True, slots=True)
class GaugeCheck:
    excess: Optional[float]
    offending: List[int]
    evaluated: int

    @property
    def empty(self) -> bool:
        return self.evaluated == 0


#largest gauge excess of triangle gradients away from the boundary layer
def constraint_violation(u: ScalarField, polygon: GradientPolygon, boundary_layer: Optional[float] = None) -> GaugeCheck:
    mesh = u.mesh
    layer = 4.0 * mesh.mesh_size if boundary_layer is None else boundary_layer
    candidates = np.flatnonzero(mesh.centroid_depth >= layer)
    if len(candidates) == 0:
        return GaugeCheck(excess=None, offending=[], evaluated=0)
    excess = np.asarray(gauge_excess(polygon, u.gradients))
    offending = candidates[excess[candidates] > MEMBERSHIP_TOL]
    offending = offending[np.argsort(-excess[offending], kind="stable")]
    return GaugeCheck(excess=float(excess[candidates].max()), offending=offending.tolist(), evaluated=len(candidates))


# Solve ------------------------------------------------------------------------


def _initial_values(choice: str, mesh: TriMesh, data: BoundaryData, lower: ScalarField, upper: ScalarField) -> np.ndarray:
    if choice == "lower":
        return lower.values.copy()
    if choice == "upper":
        return upper.values.copy()
    boundary = mesh.boundary_nodes
    phi = data.evaluate(mesh.nodes[boundary])
    if choice == "zero":
        values = np.zeros(mesh.node_count)
    elif choice == "linear":
        design = np.column_stack([mesh.nodes[boundary], np.ones(len(boundary))])
        coeffs, *_ = np.linalg.lstsq(design, phi, rcond=None)
        values = mesh.nodes @ coeffs[:2] + coeffs[2]
    else:
        raise ConfigError(f"unknown initialisation '{choice}' (expected one of {', '.join(INIT_CHOICES)})")
    values[boundary] = phi
    return values


#damped Newton on one strictly convex stage energy over the free nodes
def _minimise_stage(
    mesh: TriMesh,
    model: PenalizedTension,
    values: np.ndarray,
    free: np.ndarray,
    kkt: float,
    max_iterations: int,
    record: StageRecord,
    workers: int,
) -> np.ndarray:
    operator = mesh.gradient_operator[:, free]
    values = values.copy()
    energy, nodal, blocks = _assemble(mesh, model, values, 2, workers)
    for iteration in range(max_iterations + 1):
        grad = nodal[free]
        norm = float(np.max(np.abs(grad))) if len(grad) else 0.0
        record.energies.append(energy)
        record.gradient_norms.append(norm)
        logger.debug("stage %d iteration %d: energy=%.17g |grad|=%.3e", record.m, iteration, energy, norm)
        if norm <= kkt:
            return values
        if iteration == max_iterations:
            break
        hessian = (operator.T @ _block_diagonal(blocks) @ operator).tocsc()
        step = spsolve(hessian, -grad)
        slope = float(grad @ step)
        if not np.all(np.isfinite(step)) or slope >= 0.0:
            diagonal = hessian.diagonal()
            step = -grad / np.where(diagonal > 0.0, diagonal, 1.0)
            slope = float(grad @ step)
        t = 1.0
        slack = 16.0 * np.finfo(float).eps * abs(energy)
        full_step = None
        while True:
            trial = values.copy()
            trial[free] += t * step
            candidate = _assemble(mesh, model, trial, 2, workers)
            if full_step is None:
                full_step = (trial, candidate)
            if candidate[0] <= energy + ARMIJO * t * slope + slack:
                break
            t *= 0.5
            if t < 1e-14:
                # energy differences below rounding: accept the Newton step if it shrinks the gradient
                trial, candidate = full_step
                if float(np.max(np.abs(candidate[1][free]))) < 0.5 * norm:
                    break
                raise NonConvergence(
                    f"line search stalled at stage {record.m} after {iteration} iterations (|grad| = {norm:.3e})",
                    stage=record.m,
                    iterations=iteration,
                    residual=norm,
                )
        values = trial
        energy, nodal, blocks = candidate
    raise NonConvergence(
        f"stage {record.m} reached {max_iterations} iterations with |grad| = {record.gradient_norms[-1]:.3e} > {kkt:.3e}",
        stage=record.m,
        iterations=max_iterations,
        residual=record.gradient_norms[-1],
    )


def solve(
    problem: Problem,
    schedule: Optional[PenaltySchedule] = None,
    tol: Optional[Tolerances] = None,
    init: str = "lower",
    workers: int = 1,
) -> SolveReport:
    """Minimise sum_T area(T) F_m(grad u|_T) for m = 1, 2, ... with warm starts.

    Continuation stops after the last scheduled stage, or earlier once at
    least ``schedule.min_stages`` stages ran, the interior gauge excess is
    below ``tol.constraint`` and the stage energy moved by less than
    ``tol.energy`` relative.
    """

    schedule = schedule or PenaltySchedule()
    tol = tol or Tolerances()
    mesh, model, data = problem.mesh, problem.model, problem.data
    started = time.perf_counter()

    obstacles = Obstacles(data, model.polygon, density=min(data.sample_density, mesh.mesh_size / 4.0))
    lower, upper = obstacles.fields(mesh)
    values = _initial_values(init, mesh, data, lower, upper)
    rigid = (~mesh.boundary_mask) & (upper.values - lower.values <= 1e-10)
    values[rigid] = lower.values[rigid]
    free = np.flatnonzero(~mesh.boundary_mask & ~rigid)
    kkt = tol.kkt_for(mesh)
    layer = tol.layer_for(mesh)

    stages: List[StageRecord] = []
    previous_energy: Optional[float] = None
    penalized = None
    for m in range(1, schedule.stages + 1):
        penalized = build_penalized(model, m, schedule)
        record = StageRecord(m=m)
        values = _minimise_stage(mesh, penalized, values, free, kkt, tol.max_iterations, record, workers)
        check = constraint_violation(ScalarField(mesh, values), model.polygon, layer)
        record.max_gauge_excess, record.gauge_triangles = check.excess, check.evaluated
        stages.append(record)
        energy = record.energies[-1]
        if check.empty:
            logger.warning("stage %d: no triangles evaluated, the boundary layer %.3g covers the mesh", m, layer)
        logger.info(
            "stage %d: %d iterations, energy %.12g, interior gauge excess %s over %d triangles",
            m,
            record.iterations,
            energy,
            "none" if check.empty else f"{check.excess:.3e}",
            check.evaluated,
        )
        settled = previous_energy is not None and abs(energy - previous_energy) < tol.energy * abs(energy)
        admissible = not check.empty and check.excess < tol.constraint
        if m >= schedule.min_stages and admissible and settled:
            break
        previous_energy = energy

    #the penalized minimiser may leave the obstacle sandwich by the residual gauge excess; project it back
    clipped = np.clip(values, lower.values, upper.values)
    projection = float(np.max(np.abs(clipped - values)))
    if projection > 0.0:
        logger.info("projected the field onto the obstacle sandwich, max move %.3e", projection)
    result = ScalarField(mesh, clipped)
    residual = el_residual(result, penalized, workers)
    wall = time.perf_counter() - started
    logger.info("solve finished in %.2f s (%d stages)", wall, len(stages))
    return SolveReport(
        field=result,
        stages=stages,
        el_residual_norm=float(np.max(np.abs(residual[free]))) if len(free) else 0.0,
        wall_time=wall,
        lower=lower,
        upper=upper,
        sandwich_projection=projection,
    )


__all__ = [
    "ASSEMBLY_CHUNK",
    "INIT_CHOICES",
    "Problem",
    "SolveReport",
    "StageRecord",
    "GaugeCheck",
    "Tolerances",
    "assemble_energy",
    "constraint_violation",
    "el_residual",
    "solve",
]
