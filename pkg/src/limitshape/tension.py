"""Surface tension models, their penalized smooth family, and Legendre transforms."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, NonConvergence, OutsideDomain, SingularPoint
from .geometry import MEMBERSHIP_TOL, GradientPolygon, gauge_excess, project
from .lobachevsky import lobachevsky

logger = logging.getLogger(__name__)

_IDENTITY = np.eye(2)

#unit directions of the 8-point ring rule
_RING = np.column_stack([np.cos(np.arange(8) * np.pi / 4.0), np.sin(np.arange(8) * np.pi / 4.0)])


#value plus optional derivatives; `declined` marks points whose Hessian was refused
@dataclass(frozen=True, eq=False)
class TensionEvaluation:
    value: np.ndarray
    gradient: Optional[np.ndarray] = None
    hessian: Optional[np.ndarray] = None
    declined: Optional[np.ndarray] = None

    def scalar(self) -> "TensionEvaluation":
        """Drop the leading axis of a single-point evaluation."""

        return TensionEvaluation(
            value=float(np.asarray(self.value).reshape(-1)[0]),
            gradient=None if self.gradient is None else np.asarray(self.gradient).reshape(-1, 2)[0],
            hessian=None if self.hessian is None else np.asarray(self.hessian).reshape(-1, 2, 2)[0],
            declined=None if self.declined is None else bool(np.asarray(self.declined).reshape(-1)[0]),
        )


# Base models ------------------------------------------------------------------


#shared machinery for a convex F on the closed polygon with finite singular set Q
class TensionModel:
    """Convex surface tension on the closed polygon.

    Subclasses implement ``_raw(points, order)`` returning value, gradient and
    Hessian arrays for points of the closed polygon; ``_raw`` never raises and
    may return non-finite derivatives where F is not differentiable.
    """

    name = "abstract"
    #whether first derivatives stay finite up to the boundary
    smooth_to_boundary = True
    #whether the formula is a convex function of the whole plane
    unconstrained = False

    def __init__(self, polygon: GradientPolygon, singular_points: Sequence[Sequence[float]] = (), singular_radius: float = 1e-3) -> None:
        self.polygon = polygon
        self.singular_points = np.asarray(singular_points, dtype=float).reshape(-1, 2)
        self.singular_radius = float(singular_radius)
        if len(self.singular_points) and np.any(np.asarray(gauge_excess(polygon, self.singular_points)) >= 0.0):
            raise ConfigError("singular points must lie strictly inside the polygon")

    def _raw(self, p: np.ndarray, order: int) -> Tuple[np.ndarray, Optional[np.ndarray], Optional[np.ndarray]]:
        raise NotImplementedError

    #rule for F on the boundary: the formula extended continuously
    def boundary_value(self, p) -> np.ndarray:
        value, _, _ = self._raw(project(self.polygon, np.asarray(p, dtype=float)).reshape(-1, 2), 0)
        return value

    #distance of each point to the nearest singular point (inf when Q is empty)
    def singular_distance(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float).reshape(-1, 2)
        if not len(self.singular_points):
            return np.full(len(p), np.inf)
        diffs = p[:, None, :] - self.singular_points[None, :, :]
        return np.min(np.hypot(diffs[..., 0], diffs[..., 1]), axis=1)

    #checked vectorised evaluation used by tension_eval and the diagnostics
    def evaluate(self, p, order: int = 0) -> TensionEvaluation:
        points = np.asarray(p, dtype=float).reshape(-1, 2)
        if not self.unconstrained:
            excess = np.asarray(gauge_excess(self.polygon, points))
            if np.any(excess > MEMBERSHIP_TOL):
                worst = points[int(np.argmax(excess))]
                raise OutsideDomain(f"{self.name} tension evaluated outside N at {worst.tolist()}")
            if order >= 1 and not self.smooth_to_boundary and np.any(excess >= -MEMBERSHIP_TOL):
                worst = points[int(np.argmax(excess))]
                raise OutsideDomain(f"{self.name} tension has no derivatives on the boundary point {worst.tolist()}")
        if order >= 2:
            close = self.singular_distance(points) < self.singular_radius
            if np.any(close):
                worst = points[int(np.argmax(close))]
                raise SingularPoint(f"Hessian requested within {self.singular_radius} of a singular point at {worst.tolist()}")
        value, gradient, hessian = self._raw(points, order)
        return TensionEvaluation(value=value, gradient=gradient, hessian=hessian)

    def describe(self) -> Dict[str, object]:
        return {"model": self.name}


#F(p) = w |p - c|^2
class QuadraticTension(TensionModel):
    name = "quadratic"

    def __init__(self, polygon: GradientPolygon, weight: float = 1.0, center: Sequence[float] = (0.0, 0.0), unconstrained: bool = False) -> None:
        super().__init__(polygon)
        if weight <= 0:
            raise ConfigError("quadratic weight must be positive")
        self.weight = float(weight)
        self.center = np.asarray(center, dtype=float)
        self.unconstrained = unconstrained

    def _raw(self, p, order):
        d = p - self.center
        value = self.weight * np.einsum("ij,ij->i", d, d)
        gradient = 2.0 * self.weight * d if order >= 1 else None
        hessian = np.broadcast_to(2.0 * self.weight * _IDENTITY, (len(p), 2, 2)).copy() if order >= 2 else None
        return value, gradient, hessian

    def describe(self):
        return {"model": self.name, "weight": self.weight, "center": self.center.tolist()}


#lozenge tension -(1/pi) sum_k L(pi lambda_k) in barycentric proportions lambda of the triangle
class LozengeTension(TensionModel):
    """Surface tension of uniformly random lozenge tilings.

    The three vertices of N are sent to the pure lozenge types, so the
    proportions at slope p are the barycentric coordinates of p. With the
    default triangle (0,0), (1,0), (0,1) the proportions at slope (s, t) are
    (1 - s - t, s, t). F vanishes on the boundary and is strictly convex
    inside; det D^2F = pi^2 * (area factor)^2 everywhere inside.
    """

    name = "lozenge"
    smooth_to_boundary = False

    def __init__(self, polygon: GradientPolygon) -> None:
        if polygon.size != 3:
            raise ConfigError("the lozenge tension lives on a triangle")
        super().__init__(polygon)
        matrix = np.vstack([polygon.vertices.T, np.ones(3)])
        inverse = np.linalg.inv(matrix)
        self._jacobian = inverse[:, :2]
        self._shift = inverse[:, 2]

    def proportions(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return np.clip(p @ self._jacobian.T + self._shift, 0.0, 1.0)

    def _raw(self, p, order):
        lam = self.proportions(p)
        value = -np.sum(lobachevsky(np.pi * lam), axis=-1) / np.pi
        gradient = hessian = None
        with np.errstate(divide="ignore"):
            sines = np.sin(np.pi * lam)
            if order >= 1:
                gradient = np.log(2.0 * sines) @ self._jacobian
            if order >= 2:
                curvature = np.pi * np.cos(np.pi * lam) / sines
                hessian = np.einsum("nk,ki,kj->nij", curvature, self._jacobian, self._jacobian)
        return value, gradient, hessian

    def describe(self):
        return {
            "model": self.name,
            "convention": "proportions = barycentric coordinates of the slope; vertex k of N is lozenge type k",
            "vertices": self.polygon.vertices.tolist(),
        }


#F(p) = sum_j w_j |p - q_j|^(1 + s_j) + base |p|^2 with singular points q_j
class SingularTension(TensionModel):
    name = "custom-singular"

    def __init__(
        self,
        polygon: GradientPolygon,
        singular_points: Sequence[Sequence[float]],
        weights: Sequence[float],
        exponents: Sequence[float],
        base_weight: float = 1.0,
        singular_radius: float = 1e-3,
    ) -> None:
        super().__init__(polygon, singular_points, singular_radius)
        self.weights = np.asarray(weights, dtype=float).reshape(-1)
        self.exponents = np.asarray(exponents, dtype=float).reshape(-1)
        count = len(self.singular_points)
        if len(self.weights) != count or len(self.exponents) != count:
            raise ConfigError("custom-singular needs one weight and one exponent per singular point")
        if np.any(self.weights <= 0):
            raise ConfigError("custom-singular weights must be positive")
        if np.any((self.exponents <= 0) | (self.exponents >= 1)):
            raise ConfigError("custom-singular exponents must lie in (0, 1)")
        if base_weight <= 0:
            raise ConfigError("custom-singular base weight must be positive")
        self.base_weight = float(base_weight)

    def _raw(self, p, order):
        value = self.base_weight * np.einsum("ij,ij->i", p, p)
        gradient = 2.0 * self.base_weight * p if order >= 1 else None
        hessian = np.broadcast_to(2.0 * self.base_weight * _IDENTITY, (len(p), 2, 2)).copy() if order >= 2 else None
        for q, w, s in zip(self.singular_points, self.weights, self.exponents):
            alpha = 1.0 + s
            d = p - q
            r = np.hypot(d[:, 0], d[:, 1])
            value = value + w * r**alpha
            if order >= 1:
                with np.errstate(divide="ignore", invalid="ignore"):
                    scale = np.where(r > 0.0, w * alpha * r ** (alpha - 2.0), 0.0)
                gradient = gradient + scale[:, None] * d
            if order >= 2:
                with np.errstate(divide="ignore", invalid="ignore"):
                    radial = np.where(r > 0.0, r ** (alpha - 2.0), np.inf)
                    unit = np.where(r[:, None] > 0.0, d / np.where(r > 0.0, r, 1.0)[:, None], 0.0)
                block = _IDENTITY[None, :, :] + (alpha - 2.0) * np.einsum("ni,nj->nij", unit, unit)
                hessian = hessian + (w * alpha * radial)[:, None, None] * block
        return value, gradient, hessian

    def describe(self):
        return {
            "model": self.name,
            "singular_points": self.singular_points.tolist(),
            "weights": self.weights.tolist(),
            "exponents": self.exponents.tolist(),
            "base_weight": self.base_weight,
        }


# Penalized family -------------------------------------------------------------


#geometric schedule C_m = a^m, eps_m = b^-m, rho_m = c^-m dist(z0, dN)
@dataclass(frozen=True, slots=True)
class PenaltySchedule:
    penalty_base: float = 4.0
    epsilon_base: float = 4.0
    radius_base: float = 2.0
    stages: int = 8
    min_stages: int = 1

    def __post_init__(self) -> None:
        if self.penalty_base <= 1 or self.epsilon_base <= 1 or self.radius_base <= 1:
            raise ConfigError("penalty schedule bases must exceed 1")
        if self.stages < 1 or not 1 <= self.min_stages <= self.stages:
            raise ConfigError("penalty schedule needs 1 <= min_stages <= stages")

    def weight(self, m: int) -> float:
        return self.penalty_base**m

    def epsilon(self, m: int) -> float:
        return self.epsilon_base ** (-m)

    def radius(self, m: int, polygon: GradientPolygon) -> float:
        return self.radius_base ** (-m) * polygon.inradius_at_center


#tangent planes of the ring average at grid points a + s*edge of one inset edge;
#turn holds D^2 E(q) edge, so the envelope condition at p is turn . (p - q) = 0
@dataclass(frozen=True, slots=True)
class _EdgeTable:
    start: np.ndarray
    edge: np.ndarray
    grid: np.ndarray
    intercept: np.ndarray
    gradient: np.ndarray
    turn: np.ndarray
    turn_intercept: np.ndarray


#smooth strictly convex approximation F_m of F, finite on the whole plane
class PenalizedTension:
    """F_m(p) = E_m(p) + C_m sum_i g(n_i . p - c_i) + eps_m |p|^2 with g(t) = max(t, 0)^3.

    E_m is the ring-averaged F inside the inset polygon K_m (inset depth
    rho_m, ring radius rho_m / (2 sqrt 2)) and, outside K_m, the supremum of
    the tangent planes of that average along the boundary of K_m.
    """

    #points per inset edge in the cached tangent-plane table
    _TABLE_SAMPLES = 129
    #regula falsi steps inside the table bracket
    _REFINEMENTS = 5

    def __init__(self, base: TensionModel, m: int, penalty_weight: float, radius: float, epsilon: float) -> None:
        if m < 1:
            raise ConfigError("penalty index m must be at least 1")
        self.base = base
        self.m = int(m)
        self.penalty_weight = float(penalty_weight)
        self.radius = float(radius)
        self.epsilon = float(epsilon)
        self.polygon = base.polygon
        self.inner = base.polygon.inset(self.radius)
        self.ring_radius = self.radius / (2.0 * math.sqrt(2.0))

    # smoothed base ------------------------------------------------------------

    def _ring(self, p: np.ndarray, order: int):
        points = (p[:, None, :] + self.ring_radius * _RING[None, :, :]).reshape(-1, 2)
        value, gradient, hessian = self.base._raw(points, order)
        count = len(p)
        value = value.reshape(count, 8).mean(axis=1)
        if gradient is not None:
            gradient = gradient.reshape(count, 8, 2).mean(axis=1)
        if hessian is not None:
            hessian = hessian.reshape(count, 8, 2, 2).mean(axis=1)
        return value, gradient, hessian

    def _ring_declined(self, p: np.ndarray) -> np.ndarray:
        if not len(self.base.singular_points):
            return np.zeros(len(p), dtype=bool)
        points = (p[:, None, :] + self.ring_radius * _RING[None, :, :]).reshape(-1, 2)
        close = self.base.singular_distance(points) < self.base.singular_radius
        return close.reshape(len(p), 8).any(axis=1)

    #envelope of tangent planes along the inset boundary for points outside it
    def _envelope(self, p: np.ndarray, order: int):
        count = len(p)
        best_value = np.full(count, -np.inf)
        best_gradient = np.zeros((count, 2))
        best_hessian = np.zeros((count, 2, 2))
        for table in self._edge_tables:
            s = self._edge_argmax(p, table)
            q = table.start + s[:, None] * table.edge
            value, gradient, hessian = self._ring(q, 2 if order >= 2 else 1)
            h = value + np.einsum("ij,ij->i", gradient, p - q)
            better = h > best_value
            best_value = np.where(better, h, best_value)
            best_gradient[better] = gradient[better]
            if order >= 2:
                candidate = self._envelope_hessian(p, table.start, table.edge, s, hessian)
                best_hessian[better] = candidate[better]
        return best_value, (best_gradient if order >= 1 else None), (best_hessian if order >= 2 else None)

    #ring averages along each inset edge; F_m is fixed for the stage, so the table is built once
    @cached_property
    def _edge_tables(self) -> List[_EdgeTable]:
        grid = np.linspace(0.0, 1.0, self._TABLE_SAMPLES)
        tables = []
        for a, b in self.inner.sides:
            edge = b - a
            q = a + grid[:, None] * edge
            value, gradient, hessian = self._ring(q, 2)
            turn = hessian @ edge
            tables.append(
                _EdgeTable(
                    start=a,
                    edge=edge,
                    grid=grid,
                    intercept=value - np.einsum("ij,ij->i", gradient, q),
                    gradient=gradient,
                    turn=turn,
                    turn_intercept=np.einsum("ij,ij->i", turn, q),
                )
            )
        return tables

    def _edge_slope(self, p: np.ndarray, a: np.ndarray, edge: np.ndarray, s: np.ndarray) -> np.ndarray:
        q = a + s[:, None] * edge
        _, _, hessian = self._ring(q, 2)
        return np.einsum("i,nij,nj->n", edge, hessian, p - q)

    #maximiser over s in [0, 1] of the tangent plane at a + s*edge evaluated at p
    def _edge_argmax(self, p: np.ndarray, table: _EdgeTable) -> np.ndarray:
        rows = np.arange(len(p))
        last = len(table.grid) - 1
        index = np.argmax(table.intercept[None, :] + p @ table.gradient.T, axis=1)
        slopes = p @ table.turn.T - table.turn_intercept[None, :]
        rising = slopes[rows, index] > 0.0
        left = np.where(rising, index, np.maximum(index - 1, 0))
        right = np.where(rising, np.minimum(index + 1, last), index)
        lo, hi = table.grid[left], table.grid[right]
        slope_lo, slope_hi = slopes[rows, left], slopes[rows, right]
        s = table.grid[index].copy()
        bracket = np.flatnonzero((slope_lo > 0.0) & (slope_hi < 0.0))
        for _ in range(self._REFINEMENTS):
            if not len(bracket):
                break
            a, b, fa, fb = lo[bracket], hi[bracket], slope_lo[bracket], slope_hi[bracket]
            mid = a + (b - a) * fa / (fa - fb)
            slope = self._edge_slope(p[bracket], table.start, table.edge, mid)
            rise = slope > 0.0
            lo[bracket] = np.where(rise, mid, a)
            slope_lo[bracket] = np.where(rise, slope, fa)
            hi[bracket] = np.where(rise, b, mid)
            slope_hi[bracket] = np.where(rise, fb, slope)
            s[bracket] = mid
            bracket = bracket[slope != 0.0]
        return s

    #rank-one Hessian of the envelope at interior edge maximisers, zero at inset vertices
    def _envelope_hessian(self, p, a, edge, s, hessian):
        interior = (s > 1e-9) & (s < 1.0 - 1e-9)
        out = np.zeros((len(p), 2, 2))
        if not np.any(interior):
            return out
        delta = 1e-6
        curvature = (
            self._edge_slope(p, a, edge, np.clip(s + delta, 0.0, 1.0)) - self._edge_slope(p, a, edge, np.clip(s - delta, 0.0, 1.0))
        ) / (2.0 * delta)
        v = np.einsum("nij,j->ni", hessian, edge)
        usable = interior & (curvature < 0.0)
        scale = np.where(usable, -1.0 / np.where(usable, curvature, -1.0), 0.0)
        return scale[:, None, None] * np.einsum("ni,nj->nij", v, v)

    # public API ---------------------------------------------------------------

    def evaluate(self, p, order: int = 0) -> TensionEvaluation:
        points = np.asarray(p, dtype=float).reshape(-1, 2)
        count = len(points)
        value = np.zeros(count)
        gradient = np.zeros((count, 2)) if order >= 1 else None
        hessian = np.zeros((count, 2, 2)) if order >= 2 else None
        declined = np.zeros(count, dtype=bool)

        inside = np.asarray(gauge_excess(self.inner, points)) <= 0.0
        if np.any(inside):
            v, g, h = self._ring(points[inside], order)
            value[inside] = v
            if order >= 1:
                gradient[inside] = g
            if order >= 2:
                refused = self._ring_declined(points[inside])
                h = np.where(refused[:, None, None], 0.0, h)
                hessian[inside] = h
                declined[inside] = refused
        if np.any(~inside):
            v, g, h = self._envelope(points[~inside], order)
            value[~inside] = v
            if order >= 1:
                gradient[~inside] = g
            if order >= 2:
                hessian[~inside] = h

        t = points @ self.polygon.outward_normals.T - self.polygon.offsets
        active = np.maximum(t, 0.0)
        value = value + self.penalty_weight * np.sum(active**3, axis=1) + self.epsilon * np.einsum("ij,ij->i", points, points)
        if order >= 1:
            gradient = gradient + self.penalty_weight * (3.0 * active**2) @ self.polygon.outward_normals + 2.0 * self.epsilon * points
        if order >= 2:
            normals = self.polygon.outward_normals
            hessian = hessian + self.penalty_weight * np.einsum("nk,ki,kj->nij", 6.0 * active, normals, normals)
            hessian = hessian + 2.0 * self.epsilon * _IDENTITY
            if np.any(declined):
                hessian[declined] = self.epsilon * _IDENTITY
        return TensionEvaluation(value=value, gradient=gradient, hessian=hessian, declined=declined if order >= 2 else None)

    def describe(self) -> Dict[str, object]:
        return {
            "m": self.m,
            "penalty_weight": self.penalty_weight,
            "mollification_radius": self.radius,
            "epsilon": self.epsilon,
        }


#constructs F_m for stage m of the schedule
def build_penalized(model: TensionModel, m: int, schedule: Optional[PenaltySchedule] = None) -> PenalizedTension:
    schedule = schedule or PenaltySchedule()
    if m < 1:
        raise ConfigError("penalty index m must be at least 1")
    return PenalizedTension(
        base=model,
        m=m,
        penalty_weight=schedule.weight(m),
        radius=schedule.radius(m, model.polygon),
        epsilon=schedule.epsilon(m),
    )


# Operations -------------------------------------------------------------------


#single-point evaluation; penalized Hessians declined near singular points raise
def tension_eval(model, p, order: int = 0) -> TensionEvaluation:
    if order not in (0, 1, 2):
        raise ConfigError("order must be 0, 1, or 2")
    point = np.asarray(p, dtype=float).reshape(1, 2)
    result = model.evaluate(point, order).scalar()
    if isinstance(model, PenalizedTension) and order == 2 and result.declined:
        raise SingularPoint(f"Hessian declined near a singular point at {point[0].tolist()}")
    return result


#sup_p (p . q - F(p)) by damped Newton on the concave objective
def legendre(model, q, tol: float = 1e-10, max_iterations: int = 200) -> Tuple[float, np.ndarray]:
    if not isinstance(model, PenalizedTension) and not getattr(model, "unconstrained", False):
        raise ConfigError("legendre needs a model finite on the whole plane (penalized or unconstrained)")
    q = np.asarray(q, dtype=float)
    p = model.polygon.interior_point.copy()
    current = model.evaluate(p, 2).scalar()
    objective = float(q @ p - current.value)
    for iteration in range(max_iterations):
        residual = q - current.gradient
        if np.linalg.norm(residual) <= tol:
            return objective, p
        hessian = current.hessian
        if not np.all(np.isfinite(hessian)):
            hessian = _IDENTITY
        direction = np.linalg.solve(hessian, residual)
        step = 1.0
        while step > 1e-16:
            trial = p + step * direction
            evaluated = model.evaluate(trial, 2).scalar()
            trial_objective = float(q @ trial - evaluated.value)
            if trial_objective >= objective + 1e-4 * step * float(residual @ direction) - 1e-15 * abs(objective):
                break
            step *= 0.5
        else:
            break
        p, current, objective = trial, evaluated, trial_objective
        logger.debug("legendre iteration %d: |grad F - q| = %.3e", iteration, np.linalg.norm(q - current.gradient))
    residual = float(np.linalg.norm(q - current.gradient))
    if residual <= tol:
        return objective, p
    raise NonConvergence(f"Legendre transform did not converge at q={q.tolist()}", iterations=max_iterations, residual=residual)


# Regions and Hessian spectra --------------------------------------------------


#deterministic grid samples of a gradient-space region, nested across parameters
class GradientRegion:
    def contains(self, p: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def sample(self, samples: int) -> np.ndarray:
        lo, hi = self.bounding_box()
        side = max(int(math.ceil(math.sqrt(samples))), 2)
        xs = np.linspace(lo[0], hi[0], side)
        ys = np.linspace(lo[1], hi[1], side)
        grid = np.stack(np.meshgrid(xs, ys, indexing="xy"), axis=-1).reshape(-1, 2)
        return grid[self.contains(grid)]


@dataclass(frozen=True, eq=False)
class Disk(GradientRegion):
    center: Tuple[float, float]
    radius: float

    def contains(self, p):
        return np.hypot(p[:, 0] - self.center[0], p[:, 1] - self.center[1]) <= self.radius

    def bounding_box(self):
        c = np.asarray(self.center, dtype=float)
        return c - self.radius, c + self.radius


#points of N at distance at least `depth` from the boundary; grows toward dN as depth shrinks
#the sample grid spans the polygon's box, so regions for different depths share sample points
@dataclass(frozen=True, eq=False)
class InsetRegion(GradientRegion):
    polygon: GradientPolygon
    depth: float

    def contains(self, p):
        return np.asarray(gauge_excess(self.polygon, p)) <= -self.depth

    def bounding_box(self):
        return self.polygon.vertices.min(axis=0), self.polygon.vertices.max(axis=0)


#min/max Hessian eigenvalues over the sampled region
def hessian_bounds(model: TensionModel, region, samples: int = 4096) -> Tuple[float, float]:
    points = region.sample(samples) if isinstance(region, GradientRegion) else np.asarray(region, dtype=float).reshape(-1, 2)
    if len(points) == 0:
        raise ConfigError("hessian_bounds region contains no sample points")
    if isinstance(region, Disk) and len(model.singular_points):
        gap = np.hypot(*(model.singular_points - np.asarray(region.center)).T) - region.radius
        if np.any(gap < model.singular_radius):
            raise SingularPoint("region intersects the singular radius of a point of Q")
    evaluation = model.evaluate(points, 2)
    eigenvalues = np.linalg.eigvalsh(evaluation.hessian)
    return float(eigenvalues[:, 0].min()), float(eigenvalues[:, 1].max())


#sampled modulus of convexity F(q) - F(p) - grad F(p).(q - p) over random interior pairs
def convexity_modulus(model: TensionModel, pairs: int = 1000, seed: int = 0, depth: Optional[float] = None) -> Dict[str, float]:
    rng = np.random.default_rng(seed)
    polygon = model.polygon
    depth = 0.05 * polygon.inradius_at_center if depth is None else depth
    lo, hi = polygon.vertices.min(axis=0), polygon.vertices.max(axis=0)
    points: List[np.ndarray] = []
    while sum(len(chunk) for chunk in points) < 2 * pairs:
        chunk = rng.uniform(lo, hi, size=(4 * pairs, 2))
        keep = np.asarray(gauge_excess(polygon, chunk)) <= -depth
        keep &= model.singular_distance(chunk) >= model.singular_radius
        points.append(chunk[keep])
    sample = np.concatenate(points)[: 2 * pairs]
    p, q = sample[:pairs], sample[pairs:]
    at_p = model.evaluate(p, 1)
    at_q = model.evaluate(q, 0)
    gap = at_q.value - at_p.value - np.einsum("ij,ij->i", at_p.gradient, q - p)
    distance = np.linalg.norm(q - p, axis=1)
    return {
        "min_gap": float(gap.min()),
        "median_gap": float(np.median(gap)),
        "min_gap_over_distance_sq": float(np.min(gap / distance**2)),
    }


#Fenchel-Young equality F(p*) + F*(q) = p* . q at the Legendre maximiser
def legendre_identity_check(model, q, tol: float = 1e-10) -> float:
    value, argmax = legendre(model, q, tol)
    at = model.evaluate(argmax, 0).scalar()
    return abs(at.value + value - float(np.dot(argmax, q)))


#builds a model from config-level parameters
def make_tension(name: str, polygon: GradientPolygon, params: Optional[Dict[str, object]] = None) -> TensionModel:
    params = dict(params or {})
    if name == "quadratic":
        return QuadraticTension(polygon, weight=float(params.get("weight", 1.0)), center=params.get("center", (0.0, 0.0)))
    if name == "lozenge":
        return LozengeTension(polygon)
    if name == "custom-singular":
        return SingularTension(
            polygon,
            singular_points=params.get("singular_points", ()),
            weights=params.get("weights", ()),
            exponents=params.get("exponents", ()),
            base_weight=float(params.get("base_weight", 1.0)),
            singular_radius=float(params.get("singular_radius", 1e-3)),
        )
    raise ConfigError(f"unknown tension model '{name}'")


TENSION_MODELS = ("quadratic", "lozenge", "custom-singular")


__all__ = [
    "Disk",
    "GradientRegion",
    "InsetRegion",
    "LozengeTension",
    "PenalizedTension",
    "PenaltySchedule",
    "QuadraticTension",
    "SingularTension",
    "TENSION_MODELS",
    "TensionEvaluation",
    "TensionModel",
    "build_penalized",
    "convexity_modulus",
    "hessian_bounds",
    "legendre",
    "legendre_identity_check",
    "make_tension",
    "tension_eval",
]
