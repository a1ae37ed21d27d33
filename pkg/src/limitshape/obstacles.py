"""Boundary data, admissibility, and the extremal admissible extensions."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import shapely
from scipy.sparse.csgraph import csgraph_from_dense, johnson
from shapely.geometry import Polygon

from .errors import ConfigError, Inadmissible, MalformedBoundary
from .geometry import GradientPolygon, support
from .mesh import ScalarField, TriMesh, densify, hexagon_outline

logger = logging.getLogger(__name__)

#admissibility slack tolerance relative to the data scale
ADMISSIBLE_TOL = 1e-9

_CHUNK = 2048


#closed boundary polyline with piecewise-linear values at its vertices
@dataclass(frozen=True, eq=False)
class BoundaryData:
    polyline: np.ndarray
    values: np.ndarray
    sample_density: float = 0.01

    def __post_init__(self) -> None:
        polyline = np.asarray(self.polyline, dtype=float)
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if polyline.ndim != 2 or polyline.shape[1] != 2 or len(polyline) < 3:
            raise MalformedBoundary("boundary polyline needs at least three 2-vectors")
        if len(values) != len(polyline):
            raise MalformedBoundary(f"{len(values)} boundary values for {len(polyline)} polyline vertices")
        if len(polyline) > 3 and np.allclose(polyline[0], polyline[-1]):
            polyline, values = polyline[:-1], values[:-1]
        domain = Polygon(polyline)
        if not domain.exterior.is_simple or domain.area <= 0.0:
            raise MalformedBoundary("boundary polyline is degenerate or self-intersecting")
        if not domain.exterior.is_ccw:
            polyline, values = polyline[::-1].copy(), values[::-1].copy()
        if self.sample_density <= 0:
            raise ConfigError("sample_density must be positive")
        object.__setattr__(self, "polyline", polyline)
        object.__setattr__(self, "values", values)

    @cached_property
    def domain(self) -> Polygon:
        return Polygon(self.polyline)

    @cached_property
    def is_convex(self) -> bool:
        hull = self.domain.convex_hull.area
        return abs(hull - self.domain.area) <= 1e-12 * max(hull, 1.0)

    @property
    def segments(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        start = self.polyline
        end = np.roll(self.polyline, -1, axis=0)
        return start, end - start, self.values, np.roll(self.values, -1)

    #boundary sample points and values at spacing sample_density, vertices included
    def samples(self, density: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
        points = densify(self.polyline, density or self.sample_density)
        return points, self.evaluate(points)

    #piecewise-linear value of the nearest boundary point
    def evaluate(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        start, edge, v0, v1 = self.segments
        rel = points[:, None, :] - start[None, :, :]
        t = np.clip(np.einsum("psk,sk->ps", rel, edge) / np.einsum("sk,sk->s", edge, edge), 0.0, 1.0)
        feet = start[None] + t[..., None] * edge[None]
        dist = np.sum((points[:, None, :] - feet) ** 2, axis=-1)
        best = np.argmin(dist, axis=1)
        rows = np.arange(len(points))
        tb = t[rows, best]
        return (1.0 - tb) * v0[best] + tb * v1[best]

    def shifted(self, constant: float) -> "BoundaryData":
        return BoundaryData(self.polyline, self.values + constant, self.sample_density)

    def to_dict(self) -> Dict[str, object]:
        return {"polyline": self.polyline.tolist(), "values": self.values.tolist(), "sample_density": self.sample_density}


# Presets ----------------------------------------------------------------------


def constant_data(outline, value: float = 0.0, sample_density: float = 0.01) -> BoundaryData:
    outline = np.asarray(outline, dtype=float)
    return BoundaryData(outline, np.full(len(outline), float(value)), sample_density)


#phi(y) = slope . y + constant on the outline
def linear_data(outline, slope: Sequence[float], constant: float = 0.0, sample_density: float = 0.01) -> BoundaryData:
    outline = np.asarray(outline, dtype=float)
    return BoundaryData(outline, outline @ np.asarray(slope, dtype=float) + constant, sample_density)


#stepped-corner data of the boxed hexagon: 0 on the three corners touching the origin facet, c on the rest
def hexagon_stepped_data(a: float = 1.0, b: float = 1.0, c: float = 1.0, sample_density: float = 0.01) -> BoundaryData:
    outline = hexagon_outline(a, b, c)
    return BoundaryData(outline, np.array([0.0, 0.0, c, c, c, 0.0]), sample_density)


# Admissibility ----------------------------------------------------------------


#outcome of check_admissible; a violation names the worst pair and its slack
@dataclass(frozen=True, slots=True)
class Admissibility:
    valid: bool
    y1: Optional[np.ndarray] = None
    y2: Optional[np.ndarray] = None
    slack: float = 0.0

    def raise_if_invalid(self) -> None:
        if not self.valid:
            raise Inadmissible(
                f"boundary data violates the gradient constraint between {np.round(self.y1, 12).tolist()} "
                f"and {np.round(self.y2, 12).tolist()} (slack {self.slack:.6g})",
                y1=self.y1,
                y2=self.y2,
                slack=self.slack,
            )


def _tolerance(data: BoundaryData) -> float:
    return ADMISSIBLE_TOL * max(1.0, float(np.max(np.abs(data.values))))


#pairwise support inequality on sampled boundary pairs (path distances for nonconvex domains)
def check_admissible(data: BoundaryData, polygon: GradientPolygon, density: Optional[float] = None) -> Admissibility:
    points, values = data.samples(density)
    tol = _tolerance(data)
    worst_slack = np.inf
    worst = (0, 0)
    if data.is_convex:
        for start in range(0, len(points), _CHUNK):
            block = points[start : start + _CHUNK]
            bound = support(polygon, block[:, None, :] - points[None, :, :])
            slack = bound - (values[start : start + _CHUNK, None] - values[None, :])
            index = np.unravel_index(int(np.argmin(slack)), slack.shape)
            if slack[index] < worst_slack:
                worst_slack = float(slack[index])
                worst = (start + int(index[0]), int(index[1]))
    else:
        distance = _PathGraph(data, polygon, density).distance
        slack = distance.T - (values[:, None] - values[None, :])
        index = np.unravel_index(int(np.argmin(slack)), slack.shape)
        worst_slack = float(slack[index])
        worst = (int(index[0]), int(index[1]))
    if worst_slack < -tol:
        return Admissibility(valid=False, y1=points[worst[0]], y2=points[worst[1]], slack=worst_slack)
    return Admissibility(valid=True, slack=max(worst_slack, 0.0))


# Obstacles --------------------------------------------------------------------


#visibility graph on boundary samples with directed support weights u(b) - u(a) <= D(b - a)
class _PathGraph:
    def __init__(self, data: BoundaryData, polygon: GradientPolygon, density: Optional[float] = None) -> None:
        self.data = data
        self.polygon = polygon
        self.points, self.values = data.samples(density)
        count = len(self.points)
        a = np.repeat(self.points, count, axis=0)
        b = np.tile(self.points, (count, 1))
        visible = visible_pairs(data.domain, a, b).reshape(count, count)
        weights = support(polygon, (b - a)).reshape(count, count)
        dense = np.where(visible, weights, np.inf)
        np.fill_diagonal(dense, np.inf)
        graph = csgraph_from_dense(dense, null_value=np.inf)
        self.distance = johnson(graph, directed=True)
        np.fill_diagonal(self.distance, 0.0)

    @cached_property
    def upper_at_nodes(self) -> np.ndarray:
        return np.min(self.values[:, None] + self.distance, axis=0)

    @cached_property
    def lower_at_nodes(self) -> np.ndarray:
        return np.max(self.values[None, :] - self.distance, axis=1)

    #last straight hop from a visible graph node
    def pair(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        lower = np.empty(len(x))
        upper = np.empty(len(x))
        count = len(self.points)
        step = max(1, _CHUNK * 8 // count)
        for start in range(0, len(x), step):
            block = x[start : start + step]
            a = np.repeat(block, count, axis=0)
            b = np.tile(self.points, (len(block), 1))
            visible = visible_pairs(self.data.domain, b, a).reshape(len(block), count)
            up = self.upper_at_nodes[None, :] + support(self.polygon, block[:, None, :] - self.points[None, :, :])
            low = self.lower_at_nodes[None, :] - support(self.polygon, self.points[None, :, :] - block[:, None, :])
            upper[start : start + step] = np.min(np.where(visible, up, np.inf), axis=1)
            lower[start : start + step] = np.max(np.where(visible, low, -np.inf), axis=1)
        return lower, upper


#segment [a, b] lies in the closed domain
def visible_pairs(domain: Polygon, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    same = np.all(np.isclose(a, b, rtol=0.0, atol=1e-15), axis=1)
    lines = shapely.linestrings(np.stack([a, np.where(same[:, None], a + 1e-14, b)], axis=1))
    return shapely.covers(domain, lines) | same


#exact obstacles on convex domains: candidates are segment ends and the kinks of D(x - y(s))
def _convex_pair(data: BoundaryData, polygon: GradientPolygon, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    start, edge, v0, v1 = data.segments
    normals = polygon.outward_normals
    lower = np.empty(len(x))
    upper = np.empty(len(x))
    edge_cross = edge[:, 0, None] * normals[None, :, 1] - edge[:, 1, None] * normals[None, :, 0]
    for first in range(0, len(x), _CHUNK):
        block = x[first : first + _CHUNK]
        rel = block[:, None, :] - start[None, :, :]
        rel_cross = rel[..., 0, None] * normals[None, None, :, 1] - rel[..., 1, None] * normals[None, None, :, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            kinks = np.where(np.abs(edge_cross) > 1e-15, rel_cross / edge_cross[None], 0.0)
        kinks = np.clip(kinks, 0.0, 1.0)
        ends = np.broadcast_to(np.array([0.0, 1.0]), kinks.shape[:2] + (2,))
        s = np.concatenate([ends, kinks], axis=2)
        y = start[None, :, None, :] + s[..., None] * edge[None, :, None, :]
        phi = (1.0 - s) * v0[None, :, None] + s * v1[None, :, None]
        diff = block[:, None, None, :] - y
        upper[first : first + _CHUNK] = np.min(phi + support(polygon, diff), axis=(1, 2))
        lower[first : first + _CHUNK] = np.max(phi - support(polygon, -diff), axis=(1, 2))
    return lower, upper


#evaluator of the minimal/maximal admissible extensions for fixed data and N
class Obstacles:
    def __init__(self, data: BoundaryData, polygon: GradientPolygon, density: Optional[float] = None) -> None:
        self.data = data
        self.polygon = polygon
        self.admissibility = check_admissible(data, polygon, density)
        self.admissibility.raise_if_invalid()
        self._graph = None if data.is_convex else _PathGraph(data, polygon, density)

    def pair(self, points) -> Tuple[np.ndarray, np.ndarray]:
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        if self._graph is None:
            return _convex_pair(self.data, self.polygon, points)
        return self._graph.pair(points)

    #obstacle fields on a mesh, with boundary nodes pinned to the data
    def fields(self, mesh: TriMesh, rigid_tol: float = 1e-10) -> Tuple[ScalarField, ScalarField]:
        lower, upper = self.pair(mesh.nodes)
        boundary = mesh.boundary_nodes
        phi = self.data.evaluate(mesh.nodes[boundary])
        lower[boundary] = phi
        upper[boundary] = phi
        rigid = (~mesh.boundary_mask) & (upper - lower <= rigid_tol)
        if np.any(rigid):
            logger.warning("rigid region: %d interior nodes have coinciding obstacles", int(rigid.sum()))
        return ScalarField(mesh, lower), ScalarField(mesh, upper)


#lower/upper obstacle values at a single point
def obstacle_pair(data: BoundaryData, polygon: GradientPolygon, x) -> Tuple[float, float]:
    lower, upper = Obstacles(data, polygon).pair(np.asarray(x, dtype=float).reshape(1, 2))
    return float(lower[0]), float(upper[0])


def obstacle_fields(data: BoundaryData, polygon: GradientPolygon, mesh: TriMesh) -> Tuple[ScalarField, ScalarField]:
    return Obstacles(data, polygon, density=min(data.sample_density, mesh.mesh_size / 4.0)).fields(mesh)


#brute-force sampled oracle: min/max over dense boundary samples
def sampled_obstacle_pair(data: BoundaryData, polygon: GradientPolygon, x, density: float) -> Tuple[np.ndarray, np.ndarray]:
    points, values = data.samples(density)
    x = np.asarray(x, dtype=float).reshape(-1, 2)
    upper = np.min(values[None, :] + support(polygon, x[:, None, :] - points[None, :, :]), axis=1)
    lower = np.max(values[None, :] - support(polygon, points[None, :, :] - x[:, None, :]), axis=1)
    return lower, upper


__all__ = [
    "Admissibility",
    "BoundaryData",
    "Obstacles",
    "check_admissible",
    "constant_data",
    "hexagon_stepped_data",
    "linear_data",
    "obstacle_fields",
    "obstacle_pair",
    "sampled_obstacle_pair",
    "visible_pairs",
]
