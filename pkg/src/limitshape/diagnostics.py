"""Regularity diagnostics measured on piecewise-linear fields."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import shapely
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import ConfigError, WindowOutsideDomain
from .geometry import GradientPolygon, h_map
from .mesh import ScalarField, TriMesh, locate, recover_nodal

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class Window:
    center: Tuple[float, float]
    radius: float

    #triangles whose barycenter lies in the disk
    def triangles(self, mesh: TriMesh) -> np.ndarray:
        offset = mesh.centroids - np.asarray(self.center)
        return np.hypot(offset[:, 0], offset[:, 1]) <= self.radius

    def nodes(self, mesh: TriMesh) -> np.ndarray:
        offset = mesh.nodes - np.asarray(self.center)
        return np.hypot(offset[:, 0], offset[:, 1]) <= self.radius


def _check_window(mesh: TriMesh, window: Window) -> None:
    if window.radius <= 0:
        raise ConfigError("window radius must be positive")
    center = shapely.points(np.asarray(window.center, dtype=float))
    if not shapely.contains(mesh.domain, center) or shapely.distance(mesh.domain.exterior, center) < window.radius:
        raise WindowOutsideDomain(f"window centred at {list(window.center)} with radius {window.radius} leaves the domain")


# Caccioppoli energies ---------------------------------------------------------


@dataclass(frozen=True, slots=True)
class CaccioppoliParams:
    direction: Tuple[float, float]
    c0: float
    c1: float
    window: Window

    def __post_init__(self) -> None:
        if not self.c0 < self.c1:
            raise ConfigError("Caccioppoli thresholds need c0 < c1")
        norm = math.hypot(*self.direction)
        if norm == 0.0:
            raise ConfigError("Caccioppoli direction must be non-zero")
        object.__setattr__(self, "direction", (self.direction[0] / norm, self.direction[1] / norm))

    #slope bound of the cutoff G
    @property
    def cutoff_slope(self) -> float:
        return 1.5 / (self.c1 - self.c0)

    #smoothstep cubic: 0 below c0, 1 above c1
    def cutoff(self, t: np.ndarray) -> np.ndarray:
        s = np.clip((np.asarray(t, dtype=float) - self.c0) / (self.c1 - self.c0), 0.0, 1.0)
        return s * s * (3.0 - 2.0 * s)


#integral over the window of |grad G(u_e)|^2 with u_e recovered to nodes
def caccioppoli_energy(u: ScalarField, params: CaccioppoliParams) -> float:
    mesh = u.mesh
    _check_window(mesh, params.window)
    directional = recover_nodal(mesh, u.gradients @ np.asarray(params.direction))
    cut = ScalarField(mesh, params.cutoff(directional))
    inside = params.window.triangles(mesh)
    squared = np.einsum("ij,ij->i", cut.gradients, cut.gradients)
    return float(np.sum(mesh.areas[inside] * squared[inside]))


#slope-bound reference: (max |G'|)^2 times the window integral of |grad u_e|^2
def caccioppoli_bound(u: ScalarField, params: CaccioppoliParams) -> float:
    mesh = u.mesh
    _check_window(mesh, params.window)
    directional = ScalarField(mesh, recover_nodal(mesh, u.gradients @ np.asarray(params.direction)))
    inside = params.window.triangles(mesh)
    squared = np.einsum("ij,ij->i", directional.gradients, directional.gradients)
    return float(params.cutoff_slope**2 * np.sum(mesh.areas[inside] * squared[inside]))


#recovered Hessian per triangle: P1 gradients of the nodal-averaged gradient components
def recovered_hessian(u: ScalarField) -> np.ndarray:
    mesh = u.mesh
    nodal = u.recovered_gradient
    gx = ScalarField(mesh, nodal[:, 0]).gradients
    gy = ScalarField(mesh, nodal[:, 1]).gradients
    return np.stack([gx, gy], axis=1)


def hessian_energy(u: ScalarField, gradient_region: Callable[[np.ndarray], np.ndarray], window: Window) -> float:
    mesh = u.mesh
    _check_window(mesh, window)
    selected = window.triangles(mesh) & np.asarray(gradient_region(u.gradients), dtype=bool)
    hessian = recovered_hessian(u)
    squared = np.einsum("tij,tij->t", hessian, hessian)
    return float(np.sum(mesh.areas[selected] * squared[selected]))


# Moduli of continuity ---------------------------------------------------------


#|grad u| per triangle, recovered to the nodes so it can be rastered like u
def gradient_magnitude(u: ScalarField) -> ScalarField:
    return ScalarField(u.mesh, recover_nodal(u.mesh, np.hypot(u.gradients[:, 0], u.gradients[:, 1])))


#largest pairwise distance within a small point set
def _diameter(points: np.ndarray) -> float:
    if len(points) < 2:
        return 0.0
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    if np.all(hi - lo == 0.0):
        return 0.0
    diffs = points[:, None, :] - points[None, :, :]
    return float(np.sqrt(np.max(np.einsum("ijk,ijk->ij", diffs, diffs))))


def _sample_centers(mesh: TriMesh, margin: float, count: int) -> np.ndarray:
    inner = mesh.centroids[mesh.centroid_depth >= margin]
    if len(inner) == 0:
        raise WindowOutsideDomain(f"no sample centre lies {margin} away from the boundary")
    if len(inner) <= count:
        return inner
    index = np.linspace(0, len(inner) - 1, count).round().astype(np.int64)
    return inner[index]


def _modulus_curve(mesh: TriMesh, vectors: np.ndarray, radii: Sequence[float], centers: Optional[np.ndarray], count: int) -> List[Tuple[float, float]]:
    radii = [float(r) for r in radii]
    if not radii or any(r <= 0 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ConfigError("radii must be positive and increasing")
    if centers is None:
        centers = _sample_centers(mesh, radii[-1], count)
    tree = cKDTree(mesh.centroids)
    curve = []
    running = 0.0
    for radius in radii:
        worst = 0.0
        for members in tree.query_ball_point(centers, radius):
            if len(members) > 1:
                worst = max(worst, _diameter(vectors[np.sort(np.asarray(members))]))
        running = max(running, worst)
        curve.append((radius, running))
    return curve


#delta -> max over centres of diam(grad u(B_delta(x)))
def gradient_modulus(u: ScalarField, radii: Sequence[float], centers=None, count: int = 400) -> List[Tuple[float, float]]:
    return _modulus_curve(u.mesh, u.gradients, radii, None if centers is None else np.asarray(centers, dtype=float), count)


#the same curve for H(grad u), which collapses the boundary of N to a point
def h_continuity(u: ScalarField, polygon: GradientPolygon, radii: Sequence[float], centers=None, count: int = 400) -> List[Tuple[float, float]]:
    return _modulus_curve(u.mesh, h_map(polygon, u.gradients), radii, None if centers is None else np.asarray(centers, dtype=float), count)


# Facets -----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FacetReport:
    vertex_index: int
    vertex: np.ndarray
    bisector: np.ndarray
    triangles: np.ndarray
    area: float
    upper_chain: np.ndarray
    lower_chain: np.ndarray
    upper_convex: bool
    upper_violation: float
    lower_concave: bool
    lower_violation: float

    @property
    def passes(self) -> bool:
        return self.upper_convex and self.lower_concave


def _triangle_adjacency(mesh: TriMesh, mask: np.ndarray) -> sparse.csr_matrix:
    _, sides = mesh.edge_table
    pairs = sides[(sides[:, 1] >= 0)]
    pairs = pairs[mask[pairs[:, 0]] & mask[pairs[:, 1]]]
    n = mesh.triangle_count
    data = np.ones(len(pairs))
    return sparse.coo_matrix((data, (pairs[:, 0], pairs[:, 1])), shape=(n, n)).tocsr()


#worst three-point chord violation; positive values break convexity (sign=1) or concavity (sign=-1)
def chord_violation(chain: np.ndarray, sign: float) -> float:
    if len(chain) < 3:
        return 0.0
    x0, x1, x2 = chain[:-2, 0], chain[1:-1, 0], chain[2:, 0]
    y0, y1, y2 = chain[:-2, 1], chain[1:-1, 1], chain[2:, 1]
    weight = (x1 - x0) / (x2 - x0)
    chord = y0 + weight * (y2 - y0)
    return float(max(0.0, np.max(sign * (y1 - chord))))


def _bin_chain(points: np.ndarray, width: float) -> np.ndarray:
    if len(points) == 0:
        return np.zeros((0, 2))
    keys = np.floor(points[:, 0] / width).astype(np.int64)
    order = np.argsort(keys, kind="stable")
    keys, points = keys[order], points[order]
    unique, start = np.unique(keys, return_index=True)
    sums = np.add.reduceat(points, start, axis=0)
    counts = np.diff(np.append(start, len(points)))
    return sums / counts[:, None]


#facet regions per vertex of N with their upper (convex) and lower (concave) boundary chains
def detect_facets(
    u: ScalarField,
    polygon: GradientPolygon,
    facet_tol: float,
    chord_tol: Optional[float] = None,
    min_triangles: int = 4,
) -> List[FacetReport]:
    mesh = u.mesh
    h = mesh.mesh_size
    chord_tol = 2.0 * h if chord_tol is None else chord_tol
    edges, sides = mesh.edge_table
    on_boundary = mesh.boundary_mask[edges].all(axis=1)
    reports: List[FacetReport] = []
    for index, vertex in enumerate(polygon.vertices):
        mask = np.hypot(*(u.gradients - vertex).T) <= facet_tol
        if not np.any(mask):
            continue
        count, labels = connected_components(_triangle_adjacency(mesh, mask), directed=False)
        omega = polygon.vertex_bisector(index)
        across = np.array([-omega[1], omega[0]])
        for label in range(count):
            region = np.flatnonzero(mask & (labels == label))
            if len(region) < min_triangles:
                continue
            inside = np.zeros(mesh.triangle_count, dtype=bool)
            inside[region] = True
            left = inside[sides[:, 0]]
            right = (sides[:, 1] >= 0) & inside[np.maximum(sides[:, 1], 0)]
            rim = (left ^ right) & ~on_boundary
            owner = np.where(left[rim], sides[rim, 0], sides[rim, 1])
            midpoints = mesh.nodes[edges[rim]].mean(axis=1)
            outward = np.sign((midpoints - mesh.centroids[owner]) @ omega)
            frame = np.column_stack([midpoints @ across, midpoints @ omega])
            upper = _bin_chain(frame[outward > 0], 2.0 * h)
            lower = _bin_chain(frame[outward < 0], 2.0 * h)
            upper_violation = chord_violation(upper, 1.0)
            lower_violation = chord_violation(lower, -1.0)
            reports.append(
                FacetReport(
                    vertex_index=index,
                    vertex=vertex.copy(),
                    bisector=omega,
                    triangles=region,
                    area=float(mesh.areas[region].sum()),
                    upper_chain=upper,
                    lower_chain=lower,
                    upper_convex=upper_violation <= chord_tol,
                    upper_violation=upper_violation,
                    lower_concave=lower_violation <= chord_tol,
                    lower_violation=lower_violation,
                )
            )
    logger.debug("detected %d facets", len(reports))
    return reports


# Jump segments ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class JumpSegment:
    point: np.ndarray
    direction: np.ndarray
    extent: Tuple[float, float]
    edge_count: int
    side_index: int
    angle_deviation: float
    reach_start: bool
    reach_end: bool
    residual: float
    compliant: bool


@dataclass(frozen=True, eq=False)
class JumpReport:
    jump_edges: np.ndarray
    segments: List[JumpSegment] = field(default_factory=list)
    jump_tol: float = 0.0

    @property
    def compliant_segments(self) -> List[JumpSegment]:
        return [segment for segment in self.segments if segment.compliant]


def _line_angle(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    cosine = np.abs(np.sum(a * b, axis=-1)) / (np.linalg.norm(a, axis=-1) * np.linalg.norm(b, axis=-1))
    return np.degrees(np.arccos(np.clip(cosine, 0.0, 1.0)))


#best-aligned side; parallel sides are told apart by the gradients on either side of the chain
def _match_side(polygon: GradientPolygon, angles: np.ndarray, first: np.ndarray, second: np.ndarray) -> int:
    tied = np.flatnonzero(angles <= angles.min() + 1e-6)
    if len(tied) == 1:
        return int(tied[0])
    means = np.array([first.mean(axis=0), second.mean(axis=0)])
    best, best_gap = int(tied[0]), np.inf
    for k in tied:
        a = polygon.vertices[k]
        e = polygon.vertices[(k + 1) % polygon.size] - a
        t = np.clip((means - a) @ e / (e @ e), 0.0, 1.0)
        gap = float(np.max(np.hypot(*(means - a - t[:, None] * e).T)))
        if gap < best_gap:
            best, best_gap = int(k), gap
    return best


def detect_jump_segments(
    u: ScalarField,
    polygon: GradientPolygon,
    jump_tol: float,
    cluster_angle: float = 15.0,
    compliance_angle: float = 5.0,
    min_edges: int = 2,
) -> JumpReport:
    """Cluster high-jump edges into chains and test each chain for the side-normal structure.

    A compliant chain is straight along the outward normal of some side
    [p_i, p_(i+1)] within ``compliance_angle`` degrees, reaches within 2h
    of the domain boundary, and carries u affine with slope p_i or p_(i+1)
    up to 4h times the Lipschitz bound.
    """

    mesh = u.mesh
    h = mesh.mesh_size
    edges, sides = mesh.edge_table
    interior = sides[:, 1] >= 0
    jumps = np.zeros((len(edges), 2))
    jumps[interior] = u.gradients[sides[interior, 0]] - u.gradients[sides[interior, 1]]
    magnitude = np.hypot(jumps[:, 0], jumps[:, 1])
    selected = np.flatnonzero(interior & (magnitude > jump_tol))
    report = JumpReport(jump_edges=selected, jump_tol=jump_tol)
    if len(selected) == 0:
        return report

    #edges sharing a node with agreeing jump lines are linked
    incidence = np.concatenate([np.column_stack([edges[selected, k], np.arange(len(selected))]) for k in (0, 1)])
    incidence = incidence[np.lexsort((incidence[:, 1], incidence[:, 0]))]
    rows: List[np.ndarray] = []
    cols: List[np.ndarray] = []
    _, starts = np.unique(incidence[:, 0], return_index=True)
    for group in np.split(incidence[:, 1], starts[1:]):
        if len(group) < 2:
            continue
        a, b = np.triu_indices(len(group), k=1)
        agree = _line_angle(jumps[selected[group[a]]], jumps[selected[group[b]]]) <= cluster_angle
        rows.append(group[a][agree])
        cols.append(group[b][agree])
    link_rows = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    link_cols = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
    graph = sparse.coo_matrix((np.ones(len(link_rows)), (link_rows, link_cols)), shape=(len(selected), len(selected)))
    count, labels = connected_components(graph, directed=False)

    lipschitz = u.lipschitz_bound
    segments: List[JumpSegment] = []
    for label in range(count):
        members = selected[labels == label]
        if len(members) < min_edges:
            continue
        node_ids = np.unique(edges[members].ravel())
        points = mesh.nodes[node_ids]
        centre = points.mean(axis=0)
        _, _, vt = np.linalg.svd(points - centre, full_matrices=False)
        direction = vt[0] / np.linalg.norm(vt[0])
        if direction[0] < 0 or (direction[0] == 0 and direction[1] < 0):
            direction = -direction
        along = (points - centre) @ direction
        angles = _line_angle(polygon.outward_normals, direction[None, :])
        side = _match_side(polygon, angles, u.gradients[sides[members, 0]], u.gradients[sides[members, 1]])
        ends = node_ids[[int(np.argmin(along)), int(np.argmax(along))]]
        reach = mesh.boundary_distance(mesh.nodes[ends]) <= 2.0 * h
        values = u.values[node_ids]
        residual = np.inf
        for slope in (polygon.vertices[side], polygon.vertices[(side + 1) % polygon.size]):
            offset = values - points @ slope
            residual = min(residual, 0.5 * float(offset.max() - offset.min()))
        deviation = float(angles[side])
        compliant = deviation <= compliance_angle and bool(reach.any()) and residual <= 4.0 * h * lipschitz
        segments.append(
            JumpSegment(
                point=centre,
                direction=direction,
                extent=(float(along.min()), float(along.max())),
                edge_count=len(members),
                side_index=side,
                angle_deviation=deviation,
                reach_start=bool(reach[0]),
                reach_end=bool(reach[1]),
                residual=residual,
                compliant=compliant,
            )
        )
    return JumpReport(jump_edges=selected, segments=segments, jump_tol=jump_tol)


# Pointwise measures -----------------------------------------------------------


#sign changes of u minus its tangent plane at the centre around a circle
def tangent_sign_changes(u: ScalarField, center: Sequence[float], radius: float, samples: int = 360, tol: float = 1e-12) -> int:
    mesh = u.mesh
    _check_window(mesh, Window(tuple(center), radius))
    centre = np.asarray(center, dtype=float)
    tri, _ = locate(mesh, centre)
    slope = u.gradients[tri[0]]
    base = float(u.interpolate(centre)[0])
    angles = 2.0 * np.pi * np.arange(samples) / samples
    ring = centre + radius * np.column_stack([np.cos(angles), np.sin(angles)])
    gap = u.interpolate(ring) - base - (ring - centre) @ slope
    signs = np.sign(np.where(np.abs(gap) <= tol, 0.0, gap))
    signs = signs[signs != 0]
    if len(signs) < 2:
        return 0
    return int(np.count_nonzero(signs != np.roll(signs, 1)))


#flatness of u against slope p0 on a window: sup |u - c - p0.x| and max |grad u - p0| on the half window
def flatness_measure(u: ScalarField, p0: Sequence[float], window: Window) -> Dict[str, float]:
    mesh = u.mesh
    _check_window(mesh, window)
    p0 = np.asarray(p0, dtype=float)
    nodes = window.nodes(mesh)
    offset = u.values[nodes] - mesh.nodes[nodes] @ p0
    flatness = 0.5 * float(offset.max() - offset.min()) if len(offset) else 0.0
    half = Window(window.center, 0.5 * window.radius).triangles(mesh)
    spread = np.hypot(*(u.gradients[half] - p0).T)
    return {
        "flatness": flatness,
        "best_constant": 0.5 * float(offset.max() + offset.min()) if len(offset) else 0.0,
        "half_window_gradient_gap": float(spread.max()) if len(spread) else 0.0,
    }


__all__ = [
    "CaccioppoliParams",
    "FacetReport",
    "JumpReport",
    "JumpSegment",
    "Window",
    "caccioppoli_bound",
    "caccioppoli_energy",
    "chord_violation",
    "detect_facets",
    "detect_jump_segments",
    "flatness_measure",
    "gradient_magnitude",
    "gradient_modulus",
    "h_continuity",
    "hessian_energy",
    "recovered_hessian",
    "tangent_sign_changes",
]
