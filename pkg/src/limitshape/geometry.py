"""Exact geometry of the gradient constraint polygon N."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidPolygon

logger = logging.getLogger(__name__)

#absolute membership tolerance in gradient units
MEMBERSHIP_TOL = 1e-12

SOUTH_POLE = np.array([0.0, 0.0, -1.0])


#immutable convex polygon with counterclockwise vertices and per-side frames
@dataclass(frozen=True, eq=False)
class GradientPolygon:
    """Convex polygon N given by its vertices p_1..p_n (counterclockwise).

    Sides are [p_i, p_{i+1}] with p_{n+1} = p_1. The outward unit normal of
    side i is ``outward_normals[i]`` and ``offsets[i]`` is the matching c_i,
    so that the closure of N is {q : n_i . q <= c_i for every i}.
    """

    vertices: np.ndarray
    interior_point: np.ndarray
    outward_normals: np.ndarray = field(init=False)
    offsets: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        vertices = np.asarray(self.vertices, dtype=float)
        if vertices.ndim != 2 or vertices.shape[1] != 2 or len(vertices) < 3:
            raise InvalidPolygon("polygon needs at least three 2-vectors")
        edges = np.roll(vertices, -1, axis=0) - vertices
        lengths = np.hypot(edges[:, 0], edges[:, 1])
        if np.any(lengths <= MEMBERSHIP_TOL):
            raise InvalidPolygon("polygon has repeated vertices")
        cross = edges[:, 0] * np.roll(edges, -1, axis=0)[:, 1] - edges[:, 1] * np.roll(edges, -1, axis=0)[:, 0]
        if not np.all(cross > 0):
            raise InvalidPolygon("vertices are not in strictly convex counterclockwise position")
        normals = np.column_stack([edges[:, 1], -edges[:, 0]]) / lengths[:, None]
        offsets = np.einsum("ij,ij->i", normals, vertices)
        z0 = np.asarray(self.interior_point, dtype=float)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "interior_point", z0)
        object.__setattr__(self, "outward_normals", normals)
        object.__setattr__(self, "offsets", offsets)
        if not float(np.max(normals @ z0 - offsets)) < -MEMBERSHIP_TOL:
            raise InvalidPolygon(f"interior point {z0.tolist()} is not strictly inside the polygon")

    #builds a polygon from any orientation, reversing clockwise input with a warning
    @classmethod
    def from_vertices(cls, vertices: Sequence[Sequence[float]], interior_point: Optional[Sequence[float]] = None) -> "GradientPolygon":
        points = np.asarray(vertices, dtype=float)
        if points.ndim != 2 or points.shape[1] != 2 or len(points) < 3:
            raise InvalidPolygon("polygon needs at least three 2-vectors")
        if len(points) > 3 and np.allclose(points[0], points[-1]):
            points = points[:-1]
        if _signed_area(points) < 0:
            logger.warning("polygon vertices given clockwise; reversing to counterclockwise")
            points = points[::-1].copy()
        z0 = points.mean(axis=0) if interior_point is None else np.asarray(interior_point, dtype=float)
        return cls(vertices=points, interior_point=z0)

    @property
    def size(self) -> int:
        return len(self.vertices)

    @property
    def inward_normals(self) -> np.ndarray:
        return -self.outward_normals

    @property
    def sides(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        nxt = np.roll(self.vertices, -1, axis=0)
        return [(self.vertices[i], nxt[i]) for i in range(self.size)]

    @property
    def diameter(self) -> float:
        diffs = self.vertices[:, None, :] - self.vertices[None, :, :]
        return float(np.max(np.hypot(diffs[..., 0], diffs[..., 1])))

    #distance from z0 to the boundary; every radius in the package is measured against it
    @property
    def inradius_at_center(self) -> float:
        return float(-np.max(self.outward_normals @ self.interior_point - self.offsets))

    #Lipschitz constant of h_map on the closed polygon
    @property
    def h_lipschitz(self) -> float:
        return math.sqrt(2.0) * math.pi / self.inradius_at_center

    #direction w with w.(p - p_i) > 0 for every p != p_i in the polygon
    def vertex_bisector(self, index: int) -> np.ndarray:
        p = self.vertices[index]
        forward = self.vertices[(index + 1) % self.size] - p
        backward = self.vertices[(index - 1) % self.size] - p
        w = forward / np.linalg.norm(forward) + backward / np.linalg.norm(backward)
        return w / np.linalg.norm(w)

    #polygon inset by `depth` along every side (empty insets are rejected)
    def inset(self, depth: float) -> "GradientPolygon":
        if depth >= self.inradius_at_center:
            raise InvalidPolygon(f"inset depth {depth} swallows the interior point")
        offsets = self.offsets - depth
        n = self.size
        corners = []
        for i in range(n):
            a = self.outward_normals[i - 1]
            b = self.outward_normals[i]
            matrix = np.array([a, b])
            corners.append(np.linalg.solve(matrix, np.array([offsets[i - 1], offsets[i]])))
        return GradientPolygon(vertices=np.array(corners), interior_point=self.interior_point)

    def to_dict(self) -> Dict[str, object]:
        return {
            "vertices": self.vertices.tolist(),
            "interior_point": self.interior_point.tolist(),
        }


def _signed_area(points: np.ndarray) -> float:
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


#max over vertices of p_i . d; positively homogeneous of degree one
def support(polygon: GradientPolygon, d) -> np.ndarray | float:
    d = np.asarray(d, dtype=float)
    values = np.max(d @ polygon.vertices.T, axis=-1)
    return float(values) if values.ndim == 0 else values


#max over sides of n_i . p - c_i; nonpositive exactly on the closed polygon
def gauge_excess(polygon: GradientPolygon, p) -> np.ndarray | float:
    p = np.asarray(p, dtype=float)
    values = np.max(p @ polygon.outward_normals.T - polygon.offsets, axis=-1)
    return float(values) if values.ndim == 0 else values


def contains(polygon: GradientPolygon, p, tol: float = MEMBERSHIP_TOL) -> np.ndarray | bool:
    excess = gauge_excess(polygon, p)
    return bool(excess <= tol) if np.ndim(excess) == 0 else excess <= tol


#Euclidean nearest point of the closed polygon
def project(polygon: GradientPolygon, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    flat = p.reshape(-1, 2)
    out = flat.copy()
    outside = np.max(flat @ polygon.outward_normals.T - polygon.offsets, axis=-1) > 0.0
    if np.any(outside):
        q = flat[outside]
        a = polygon.vertices
        e = np.roll(a, -1, axis=0) - a
        rel = q[:, None, :] - a[None, :, :]
        t = np.clip(np.einsum("mnk,nk->mn", rel, e) / np.einsum("nk,nk->n", e, e), 0.0, 1.0)
        feet = a[None, :, :] + t[..., None] * e[None, :, :]
        dist = np.sum((feet - q[:, None, :]) ** 2, axis=-1)
        best = np.argmin(dist, axis=1)
        out[outside] = feet[np.arange(len(q)), best]
    return out.reshape(p.shape)


#signed Euclidean distance: negative inside, zero on the boundary
def signed_distance(polygon: GradientPolygon, p) -> np.ndarray | float:
    p = np.asarray(p, dtype=float)
    excess = np.asarray(gauge_excess(polygon, p))
    outside_dist = np.linalg.norm(project(polygon, p) - p, axis=-1)
    values = np.where(excess > 0.0, outside_dist, excess)
    return float(values) if values.ndim == 0 else values


#radial gauge of p - z0 relative to N - z0: 0 at z0, 1 on the boundary
def radial_gauge(polygon: GradientPolygon, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    z0 = polygon.interior_point
    heights = polygon.offsets - polygon.outward_normals @ z0
    return np.max(((p - z0) @ polygon.outward_normals.T) / heights, axis=-1)


#continuous map onto the sphere collapsing the boundary to the south pole
def h_map(polygon: GradientPolygon, p, tol: float = MEMBERSHIP_TOL) -> np.ndarray:
    """Map gradients in the closed polygon to the unit sphere.

    r is the radial gauge about z0 (0 at z0, 1 on the boundary) and theta
    the angle of p - z0; the image is
    (sin(pi r) cos(theta), sin(pi r) sin(theta), cos(pi r)). Points outside
    the polygon are projected first. Every point with gauge excess at least
    -tol lands exactly on (0, 0, -1).
    """

    p = np.asarray(p, dtype=float)
    q = project(polygon, p)
    r = np.clip(radial_gauge(polygon, q), 0.0, 1.0)
    rel = q - polygon.interior_point
    theta = np.arctan2(rel[..., 1], rel[..., 0])
    ring = np.sin(np.pi * r)
    image = np.stack([ring * np.cos(theta), ring * np.sin(theta), np.cos(np.pi * r)], axis=-1)
    on_boundary = np.asarray(gauge_excess(polygon, p)) >= -tol
    return np.where(on_boundary[..., None], SOUTH_POLE, image)


#square [-h, h]^2 centred at the origin
def square(half_width: float = 1.0) -> GradientPolygon:
    h = float(half_width)
    return GradientPolygon.from_vertices([(-h, -h), (h, -h), (h, h), (-h, h)])


#the slope triangle of stepped surfaces in lattice coordinates
def lozenge_triangle() -> GradientPolygon:
    return GradientPolygon.from_vertices([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)])


def regular_polygon(sides: int, radius: float = 1.0) -> GradientPolygon:
    angles = 2.0 * np.pi * np.arange(sides) / sides
    return GradientPolygon.from_vertices(np.column_stack([radius * np.cos(angles), radius * np.sin(angles)]))


POLYGON_PRESETS = {
    "square": square,
    "lozenge": lozenge_triangle,
}


__all__ = [
    "GradientPolygon",
    "MEMBERSHIP_TOL",
    "POLYGON_PRESETS",
    "contains",
    "gauge_excess",
    "h_map",
    "lozenge_triangle",
    "project",
    "radial_gauge",
    "regular_polygon",
    "signed_distance",
    "square",
    "support",
]
