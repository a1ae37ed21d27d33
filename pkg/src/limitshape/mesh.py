"""Triangle meshes of the domain and piecewise-linear fields on them."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
import shapely
from scipy import sparse
from scipy.spatial import Delaunay, cKDTree
from shapely.geometry import Polygon

from .errors import MalformedBoundary, MeshDegenerate, MeshMismatch

logger = logging.getLogger(__name__)

#barycentric slack accepted when locating points on shared edges
LOCATE_TOL = 1e-10


#conforming triangulation of a polygonal domain; triangles are counterclockwise
@dataclass(frozen=True, eq=False)
class TriMesh:
    nodes: np.ndarray
    triangles: np.ndarray
    outline: np.ndarray

    def __post_init__(self) -> None:
        nodes = np.ascontiguousarray(self.nodes, dtype=float)
        triangles = np.ascontiguousarray(self.triangles, dtype=np.int64)
        outline = np.asarray(self.outline, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != 2 or triangles.ndim != 2 or triangles.shape[1] != 3:
            raise MeshDegenerate("mesh needs (n, 2) nodes and (t, 3) triangles")
        if len(triangles) == 0:
            raise MeshDegenerate("mesh has no triangles")
        if triangles.min() < 0 or triangles.max() >= len(nodes):
            raise MeshDegenerate("triangle refers to a missing node")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "triangles", triangles)
        object.__setattr__(self, "outline", outline)
        if np.any(self.areas <= 0.0):
            bad = int(np.argmin(self.areas))
            raise MeshDegenerate(f"triangle {bad} has non-positive area {self.areas[bad]:.3e}")
        used = np.zeros(len(nodes), dtype=bool)
        used[triangles.ravel()] = True
        if not used.all():
            raise MeshDegenerate(f"{int((~used).sum())} nodes belong to no triangle")

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def triangle_count(self) -> int:
        return len(self.triangles)

    @cached_property
    def areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @property
    def area(self) -> float:
        return float(self.areas.sum())

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.nodes[self.triangles].mean(axis=1)

    #gradients of the three hat functions on every triangle, shape (t, 3, 2)
    @cached_property
    def shape_gradients(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        frame = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=1)
        inverse = np.linalg.inv(frame)
        g1 = inverse[:, :, 0]
        g2 = inverse[:, :, 1]
        return np.stack([-(g1 + g2), g1, g2], axis=1)

    #sparse operator G with (G u)[2t:2t+2] = gradient of u on triangle t
    @cached_property
    def gradient_operator(self) -> sparse.csr_matrix:
        t = self.triangle_count
        rows = np.repeat(np.arange(2 * t).reshape(t, 2), 3, axis=1).reshape(t, 2, 3)
        cols = np.broadcast_to(self.triangles[:, None, :], (t, 2, 3))
        data = np.transpose(self.shape_gradients, (0, 2, 1))
        return sparse.csr_matrix((data.ravel(), (rows.ravel(), cols.ravel())), shape=(2 * t, self.node_count))

    #unique undirected edges (e, 2) and the triangles on each side (-1 when on the boundary)
    @cached_property
    def edge_table(self) -> Tuple[np.ndarray, np.ndarray]:
        local = self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
        owner = np.repeat(np.arange(self.triangle_count), 3)
        key = np.sort(local, axis=1)
        order = np.lexsort((key[:, 1], key[:, 0]))
        key, owner = key[order], owner[order]
        fresh = np.ones(len(key), dtype=bool)
        fresh[1:] = np.any(key[1:] != key[:-1], axis=1)
        index = np.cumsum(fresh) - 1
        edges = key[fresh]
        sides = np.full((len(edges), 2), -1, dtype=np.int64)
        first = np.flatnonzero(fresh)
        sides[:, 0] = owner[first]
        second = ~fresh
        sides[index[second], 1] = owner[second]
        return edges, sides

    @property
    def edges(self) -> np.ndarray:
        return self.edge_table[0]

    @cached_property
    def boundary_nodes(self) -> np.ndarray:
        edges, sides = self.edge_table
        return np.unique(edges[sides[:, 1] < 0].ravel())

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.node_count, dtype=bool)
        mask[self.boundary_nodes] = True
        return mask

    @cached_property
    def mesh_size(self) -> float:
        e = self.nodes[self.edges[:, 1]] - self.nodes[self.edges[:, 0]]
        return float(np.max(np.hypot(e[:, 0], e[:, 1])))

    @cached_property
    def domain(self) -> Polygon:
        return Polygon(self.outline)

    @cached_property
    def _centroid_tree(self) -> cKDTree:
        return cKDTree(self.centroids)

    #boundary distance of every triangle centroid
    @cached_property
    def centroid_depth(self) -> np.ndarray:
        return self.boundary_distance(self.centroids)

    #distance of each point to the domain boundary (0 on the boundary)
    def boundary_distance(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        return shapely.distance(self.domain.exterior, shapely.points(points))

    def to_dict(self) -> Dict[str, object]:
        return {"nodes": self.node_count, "triangles": self.triangle_count, "mesh_size": self.mesh_size, "area": self.area}


#finds the containing triangle and barycentric weights for each point
def locate(mesh: TriMesh, points, candidates: int = 12) -> Tuple[np.ndarray, np.ndarray]:
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    count = len(points)
    found = np.full(count, -1, dtype=np.int64)
    weights = np.zeros((count, 3))
    k = min(candidates, mesh.triangle_count)
    _, nearest = mesh._centroid_tree.query(points, k=k)
    nearest = np.asarray(nearest).reshape(count, k)
    for column in range(k):
        pending = found < 0
        if not np.any(pending):
            break
        tri = nearest[pending, column]
        bary = _barycentric(mesh, tri, points[pending])
        hit = np.all(bary >= -LOCATE_TOL, axis=1)
        rows = np.flatnonzero(pending)[hit]
        found[rows] = tri[hit]
        weights[rows] = bary[hit]
    pending = np.flatnonzero(found < 0)
    for row in pending:
        bary = _barycentric(mesh, np.arange(mesh.triangle_count), np.broadcast_to(points[row], (mesh.triangle_count, 2)))
        score = bary.min(axis=1)
        best = int(np.argmax(score))
        if score[best] >= -LOCATE_TOL:
            found[row] = best
            weights[row] = bary[best]
    return found, weights


def _barycentric(mesh: TriMesh, tri: np.ndarray, points: np.ndarray) -> np.ndarray:
    origin = mesh.nodes[mesh.triangles[tri, 0]]
    g = mesh.shape_gradients[tri]
    rel = points - origin
    l1 = np.einsum("ij,ij->i", g[:, 1], rel)
    l2 = np.einsum("ij,ij->i", g[:, 2], rel)
    return np.column_stack([1.0 - l1 - l2, l1, l2])


#nodal values on a mesh; per-triangle gradients are exact for the P1 interpolant
@dataclass(frozen=True, eq=False)
class ScalarField:
    mesh: TriMesh
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if len(values) != self.mesh.node_count:
            raise MeshMismatch(f"field has {len(values)} values for {self.mesh.node_count} nodes")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, mesh: TriMesh, fn: Callable[[np.ndarray], np.ndarray]) -> "ScalarField":
        return cls(mesh, np.asarray(fn(mesh.nodes), dtype=float))

    @classmethod
    def linear(cls, mesh: TriMesh, slope: Sequence[float], constant: float = 0.0) -> "ScalarField":
        return cls(mesh, mesh.nodes @ np.asarray(slope, dtype=float) + constant)

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.mesh, values)

    @cached_property
    def gradients(self) -> np.ndarray:
        return np.einsum("tk,tkd->td", self.values[self.mesh.triangles], self.mesh.shape_gradients)

    #Lipschitz bound M: largest triangle gradient norm
    @property
    def lipschitz_bound(self) -> float:
        return float(np.max(np.hypot(self.gradients[:, 0], self.gradients[:, 1])))

    #area-weighted average of the gradients of the triangles around each node
    @cached_property
    def recovered_gradient(self) -> np.ndarray:
        return recover_nodal(self.mesh, self.gradients)

    def interpolate(self, points) -> np.ndarray:
        tri, bary = locate(self.mesh, points)
        if np.any(tri < 0):
            missing = np.asarray(points, dtype=float).reshape(-1, 2)[tri < 0][0]
            raise MeshMismatch(f"point {missing.tolist()} lies outside the mesh")
        return np.einsum("ij,ij->i", self.values[self.mesh.triangles[tri]], bary)


#area-weighted nodal recovery of per-triangle data (t, ...) -> (n, ...)
def recover_nodal(mesh: TriMesh, per_triangle: np.ndarray) -> np.ndarray:
    per_triangle = np.asarray(per_triangle, dtype=float)
    tail = per_triangle.shape[1:]
    flat = per_triangle.reshape(mesh.triangle_count, -1)
    weights = np.repeat(mesh.areas, 3)
    nodes = mesh.triangles.ravel()
    total = np.zeros((mesh.node_count, flat.shape[1]))
    np.add.at(total, nodes, weights[:, None] * np.repeat(flat, 3, axis=0))
    mass = np.bincount(nodes, weights=weights, minlength=mesh.node_count)
    return (total / mass[:, None]).reshape((mesh.node_count,) + tail)


# Mesh presets -----------------------------------------------------------------


#structured grid of [x0, x0+width] x [y0, y0+height]; cells are split along (1, 1)
def rectangle_mesh(width: float = 1.0, height: float = 1.0, nx: int = 16, ny: Optional[int] = None, origin: Sequence[float] = (0.0, 0.0)) -> TriMesh:
    ny = nx if ny is None else ny
    if nx < 1 or ny < 1:
        raise MeshDegenerate("rectangle mesh needs at least one cell per direction")
    x0, y0 = float(origin[0]), float(origin[1])
    xs = x0 + width * np.arange(nx + 1) / nx
    ys = y0 + height * np.arange(ny + 1) / ny
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    nodes = np.column_stack([gx.ravel(), gy.ravel()])
    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    a = (j * (nx + 1) + i).ravel()
    b, c, d = a + 1, a + nx + 2, a + nx + 1
    triangles = np.concatenate([np.column_stack([a, b, c]), np.column_stack([a, c, d])])
    outline = np.array([(x0, y0), (x0 + width, y0), (x0 + width, y0 + height), (x0, y0 + height)])
    return TriMesh(nodes=nodes, triangles=triangles, outline=outline)


#corners of the lattice hexagon with sides a, b, c in the (1,0), (1,1), (0,1) frame
def hexagon_outline(a: float, b: float, c: float) -> np.ndarray:
    return np.array([(0.0, 0.0), (a, 0.0), (a + c, c), (a + c, b + c), (c, b + c), (0.0, b)], dtype=float)


def in_lattice_hexagon(i, j, a, b, c) -> np.ndarray:
    i = np.asarray(i)
    j = np.asarray(j)
    return (j >= 0) & (i >= 0) & (i <= a + c) & (j <= b + c) & (i - j <= a) & (j - i <= b)


#lattice hexagon with sides a, b, c meshed at `resolution` nodes per unit length
def hexagon_mesh(a: int = 1, b: int = 1, c: int = 1, resolution: int = 16) -> TriMesh:
    A, B, C = a * resolution, b * resolution, c * resolution
    i, j = np.meshgrid(np.arange(A + C + 1), np.arange(B + C + 1), indexing="xy")
    inside = in_lattice_hexagon(i, j, A, B, C)
    index = np.full(i.shape, -1, dtype=np.int64)
    index[inside] = np.arange(int(inside.sum()))
    nodes = np.column_stack([i[inside], j[inside]]).astype(float) / resolution
    base = index[:-1, :-1]
    right = index[:-1, 1:]
    up = index[1:, :-1]
    diag = index[1:, 1:]
    lower = (base >= 0) & (right >= 0) & (diag >= 0)
    upper = (base >= 0) & (diag >= 0) & (up >= 0)
    triangles = np.concatenate(
        [
            np.column_stack([base[lower], right[lower], diag[lower]]),
            np.column_stack([base[upper], diag[upper], up[upper]]),
        ]
    )
    return TriMesh(nodes=nodes, triangles=triangles, outline=hexagon_outline(a, b, c))


def polygon_mesh(vertices: Sequence[Sequence[float]], h: float) -> TriMesh:
    """Mesh a simple polygon from an unconstrained Delaunay triangulation.

    Nodes are the outline densified at spacing h plus an interior grid kept
    0.3h away from the outline; triangles whose centroid falls outside the
    polygon are dropped. No edge is constrained, so every pair of consecutive
    outline samples is checked to be a mesh edge and MeshDegenerate is raised
    when one is missing.
    """

    outline = np.asarray(vertices, dtype=float)
    domain = Polygon(outline)
    if not domain.is_valid or domain.area <= 0.0:
        raise MalformedBoundary("domain outline is not a simple polygon")
    if not domain.exterior.is_ccw:
        outline = outline[::-1].copy()
        domain = Polygon(outline)
    boundary = densify(outline, h)
    lo, hi = outline.min(axis=0), outline.max(axis=0)
    xs = np.arange(lo[0] + h, hi[0], h)
    ys = np.arange(lo[1] + h, hi[1], h)
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    grid = np.column_stack([gx.ravel(), gy.ravel()])
    if len(grid):
        keep = shapely.contains_xy(domain, grid[:, 0], grid[:, 1])
        grid = grid[keep]
        keep = shapely.distance(domain.exterior, shapely.points(grid)) > 0.3 * h
        grid = grid[keep]
    nodes = np.concatenate([boundary, grid]) if len(grid) else boundary
    triangles = Delaunay(nodes).simplices
    centroids = nodes[triangles].mean(axis=1)
    triangles = triangles[shapely.contains_xy(domain, centroids[:, 0], centroids[:, 1])]
    p = nodes[triangles]
    cross = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
    triangles = np.where((cross < 0)[:, None], triangles[:, [0, 2, 1]], triangles)
    mesh = TriMesh(nodes=nodes, triangles=triangles, outline=outline)
    _check_outline_edges(mesh, len(boundary))
    logger.debug("polygon mesh: %d nodes, %d triangles", len(nodes), len(triangles))
    return mesh


#the first `count` nodes trace the outline in order; each consecutive pair must be a boundary edge
def _check_outline_edges(mesh: TriMesh, count: int) -> None:
    edges, sides = mesh.edge_table
    width = mesh.node_count
    present = edges[sides[:, 1] < 0]
    first = np.arange(count)
    second = np.roll(first, -1)
    wanted = np.minimum(first, second) * width + np.maximum(first, second)
    missing = ~np.isin(wanted, present[:, 0] * width + present[:, 1])
    if np.any(missing):
        k = int(np.argmax(missing))
        raise MeshDegenerate(f"outline segment {mesh.nodes[first[k]].tolist()} -> {mesh.nodes[second[k]].tolist()} is not a mesh edge; use a smaller h")


#points along a closed polyline at spacing at most h, vertices included
def densify(outline: np.ndarray, h: float) -> np.ndarray:
    chunks = []
    for start, end in zip(outline, np.roll(outline, -1, axis=0)):
        pieces = max(int(np.ceil(np.linalg.norm(end - start) / h)), 1)
        t = np.arange(pieces)[:, None] / pieces
        chunks.append(start + t * (end - start))
    return np.concatenate(chunks)


__all__ = [
    "LOCATE_TOL",
    "ScalarField",
    "TriMesh",
    "densify",
    "hexagon_mesh",
    "hexagon_outline",
    "in_lattice_hexagon",
    "locate",
    "polygon_mesh",
    "recover_nodal",
    "rectangle_mesh",
]
