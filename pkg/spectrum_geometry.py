"""
GCI Toolkit - Spectrum Geometry
Optimal GSI circle for a convex spectrum polygon

The GSI parameter mu0 is the center of the circle that encloses the spectrum
and is seen from the origin at the smallest angle alpha0. The contraction
factor of the iteration is rho0 = sin(alpha0 / 2) = R / |mu0|.

Two independent routes are provided:

1. ``optimal_circle`` - the finite algorithm over vertex pairs and
   vertex triples
2. ``brute_force_optimal`` - grid search plus local refinement of
   max_i |mu - lambda_i| / |mu|, used as a validation oracle
"""

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from core.config import config
from core.exceptions import (
    DegenerateSegment,
    InvalidRange,
    NoValidCircle,
    OriginInsideHull,
    OriginOnSegment,
)

ComplexPoint = complex


@dataclass(frozen=True)
class SpectrumPolygon:
    """Convex hull of a spectrum, vertices counterclockwise"""
    vertices: Tuple[complex, ...]

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def diameter(self) -> float:
        if len(self.vertices) < 2:
            return 0.0
        v = np.asarray(self.vertices)
        return float(np.max(np.abs(v[:, None] - v[None, :])))

    @property
    def scale(self) -> float:
        """Length scale for relative tolerances"""
        v = np.asarray(self.vertices)
        return max(self.diameter, float(np.max(np.abs(v))))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=complex)


@dataclass(frozen=True)
class EnclosingCircle:
    """Optimal GSI circle: center mu0, radius R, viewing angle alpha0, rho0 = sin(alpha0/2)"""
    center: complex
    radius: float
    alpha0: float
    rho0: float

    @classmethod
    def from_center(cls, center: complex, radius: float) -> "EnclosingCircle":
        center = complex(center)
        radius = float(radius)
        distance = abs(center)
        if distance <= radius:
            raise OriginInsideHull(
                f"Circle centered at {center} with radius {radius} contains the origin"
            )
        rho0 = radius / distance
        return cls(center=center, radius=radius, alpha0=2.0 * math.asin(rho0), rho0=rho0)

    def contains(self, z: complex, atol: float = 0.0) -> bool:
        return abs(complex(z) - self.center) <= self.radius + atol

    def boundary(self, samples: int) -> np.ndarray:
        return circle_points(self.center, self.radius, samples)


def circle_points(center: complex, radius: float, samples: int) -> np.ndarray:
    theta = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    return complex(center) + radius * np.exp(1j * theta)


def _cross(o: complex, a: complex, b: complex) -> float:
    """z-component of (a - o) x (b - o)"""
    return (a.real - o.real) * (b.imag - o.imag) - (a.imag - o.imag) * (b.real - o.real)


def _rtol() -> float:
    return config.getfloat("GEOMETRY", "CONTAINMENT_RTOL", 1e-12)


def _origin_in_hull(vertices: Sequence[complex], atol: float) -> bool:
    """Origin inside or on the convex polygon (degenerate hulls included)"""
    n = len(vertices)
    if n == 1:
        return abs(vertices[0]) <= atol
    if n == 2:
        p, q = vertices
        return _distance_to_segment(0j, p, q) <= atol
    for i in range(n):
        a, b = vertices[i], vertices[(i + 1) % n]
        edge = abs(b - a)
        # signed distance of the origin to the edge line, positive inside
        if _cross(a, b, 0j) / edge < -atol:
            return False
    return True


def _distance_to_segment(z: complex, p: complex, q: complex) -> float:
    d = q - p
    length2 = abs(d) ** 2
    if length2 == 0.0:
        return abs(z - p)
    t = ((z - p) * d.conjugate()).real / length2
    t = min(1.0, max(0.0, t))
    return abs(z - (p + t * d))


def hull_vertices(points: Iterable[complex]) -> Tuple[complex, ...]:
    """Monotone chain hull, counterclockwise, no origin check"""
    pts = sorted({(float(complex(z).real), float(complex(z).imag)) for z in points})
    if not pts:
        raise ValueError("convex_hull needs at least one point")
    if not all(math.isfinite(x) and math.isfinite(y) for x, y in pts):
        raise ValueError("convex_hull points must be finite")

    cpts = [complex(x, y) for x, y in pts]
    if len(cpts) == 1:
        return tuple(cpts)

    lower: List[complex] = []
    for p in cpts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: List[complex] = []
    for p in reversed(cpts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return tuple(lower[:-1] + upper[:-1])


def convex_hull(points: Iterable[complex]) -> SpectrumPolygon:
    """
    Minimal convex polygon containing all points.

    Collinear and duplicate points are dropped, so a hull may degenerate to
    a segment (2 vertices) or a single point.
    """
    polygon = SpectrumPolygon(vertices=hull_vertices(points))
    atol = _rtol() * polygon.scale
    if _origin_in_hull(polygon.vertices, atol):
        raise OriginInsideHull(
            f"Origin lies inside or on the convex hull {polygon.vertices}; GSI is not applicable"
        )
    return polygon


def is_gsi_applicable(points: Iterable[complex]) -> bool:
    """True when the origin lies strictly outside the convex hull of the points"""
    try:
        convex_hull(points)
    except OriginInsideHull:
        return False
    return True


def circumcenter(a: complex, b: complex, c: complex) -> Optional[complex]:
    """Center of the circle through three points; None when they are collinear"""
    ox = (min(a.real, b.real, c.real) + max(a.real, b.real, c.real)) / 2.0
    oy = (min(a.imag, b.imag, c.imag) + max(a.imag, b.imag, c.imag)) / 2.0
    ax, ay = a.real - ox, a.imag - oy
    bx, by = b.real - ox, b.imag - oy
    cx, cy = c.real - ox, c.imag - oy
    d = (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by)) * 2.0
    if d == 0.0:
        return None
    a2, b2, c2 = ax * ax + ay * ay, bx * bx + by * by, cx * cx + cy * cy
    x = ox + (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d
    y = oy + (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d
    return complex(x, y)


def segment_optimal_circle(p: complex, q: complex) -> EnclosingCircle:
    """
    Optimal circle for a spectrum on the segment [p, q].

    The center lies on the perpendicular bisector of [p, q] where it meets the
    circle through p, q and the origin; of the two intersections the one whose
    circle leaves the origin outside is taken. For a segment on a beam from the
    origin the center is the midpoint.
    """
    p, q = complex(p), complex(q)
    scale = max(abs(p), abs(q), abs(q - p))
    atol = _rtol() * scale
    if abs(q - p) <= atol:
        raise DegenerateSegment(f"Segment endpoints coincide: {p}, {q}")
    if _distance_to_segment(0j, p, q) <= atol:
        raise OriginOnSegment(f"Segment [{p}, {q}] contains the origin")

    if abs(_cross(0j, p, q)) <= atol * scale:
        center = (p + q) / 2.0
        return EnclosingCircle.from_center(center, abs(q - p) / 2.0)

    c = circumcenter(0j, p, q)
    rho = abs(c)
    d = 1j * (q - p) / abs(q - p)
    candidates = [c + rho * d, c - rho * d]
    # the minimizing intersection is the one whose circle excludes the origin
    best = max(candidates, key=lambda mu: abs(mu) - abs(mu - p))
    return EnclosingCircle.from_center(best, max(abs(best - p), abs(best - q)))


def _encloses(center: complex, radius: float, vertices: np.ndarray, atol: float) -> bool:
    return bool(np.all(np.abs(vertices - center) <= radius + atol))


def optimal_circle(poly: SpectrumPolygon) -> EnclosingCircle:
    """Finite algorithm for the optimal GSI circle: vertex pairs first, then vertex triples"""
    vertices = poly.as_array()
    scale = poly.scale
    atol = _rtol() * scale
    if _origin_in_hull(poly.vertices, atol):
        raise OriginInsideHull(f"Origin lies inside or on the polygon {poly.vertices}")

    if poly.n == 1:
        return EnclosingCircle.from_center(poly.vertices[0], 0.0)
    if poly.n == 2:
        return segment_optimal_circle(*poly.vertices)

    # pairs: best circle of every vertex pair, first one enclosing the polygon
    for i, j in combinations(range(poly.n), 2):
        circle = segment_optimal_circle(poly.vertices[i], poly.vertices[j])
        if _encloses(circle.center, circle.radius, vertices, atol):
            logger.debug(f"pair circle through vertices {i},{j}: rho0={circle.rho0:.6g}")
            return circle

    # triples: circles through vertex triples enclosing the polygon, minimal rho0
    best: Optional[EnclosingCircle] = None
    best_triple: Optional[Tuple[int, int, int]] = None
    ties: List[EnclosingCircle] = []
    for triple in combinations(range(poly.n), 3):
        a, b, c = (poly.vertices[k] for k in triple)
        center = circumcenter(a, b, c)
        if center is None:
            continue
        radius = max(abs(center - a), abs(center - b), abs(center - c))
        if abs(center) <= radius + atol:
            continue
        if not _encloses(center, radius, vertices, atol):
            continue
        circle = EnclosingCircle.from_center(center, radius)
        if best is None or circle.rho0 < best.rho0 - 1e-15:
            best, best_triple, ties = circle, triple, []
        elif abs(circle.rho0 - best.rho0) <= 1e-15:
            ties.append(circle)

    if best is None:
        raise NoValidCircle(f"No enclosing circle excludes the origin for {poly.vertices}")

    tie_atol = config.getfloat("GEOMETRY", "TIE_CENTER_ATOL", 1e-9) * scale
    for other in ties:
        if abs(other.center - best.center) > tie_atol:
            logger.warning(
                f"triple circles tie with different centers: {best.center} vs {other.center} (rho0={best.rho0:.12g})"
            )
    logger.debug(f"triple circle through vertices {best_triple}: rho0={best.rho0:.6g}")
    return best


def _ratio(mu: np.ndarray, points: np.ndarray) -> np.ndarray:
    """max_i |mu - lambda_i| / |mu| evaluated over an array of candidate centers"""
    with np.errstate(divide="ignore", invalid="ignore"):
        spread = np.max(np.abs(mu[..., None] - points), axis=-1)
        value = spread / np.abs(mu)
    return np.where(np.abs(mu) > 0.0, value, np.inf)


def brute_force_optimal(points: Sequence[complex], grid_resolution: Optional[int] = None) -> EnclosingCircle:
    """
    Oracle for the optimal circle: coarse grid over the hull bounding box inflated 3x, then
    repeated local refinement around the best grid point.
    """
    if grid_resolution is None:
        grid_resolution = config.getint("GEOMETRY", "BRUTE_FORCE_GRID", 201)
    if grid_resolution < 3:
        raise InvalidRange(f"grid_resolution must be at least 3, got {grid_resolution}")
    poly = convex_hull(points)
    pts = poly.as_array()
    if poly.n == 1:
        return EnclosingCircle.from_center(poly.vertices[0], 0.0)

    rounds = max(10, config.getint("GEOMETRY", "BRUTE_FORCE_ROUNDS", 24))

    lo_x, hi_x = pts.real.min(), pts.real.max()
    lo_y, hi_y = pts.imag.min(), pts.imag.max()
    middle = complex((lo_x + hi_x) / 2.0, (lo_y + hi_y) / 2.0)
    half = 1.5 * max(hi_x - lo_x, hi_y - lo_y)

    def search(center: complex, half_width: float, count: int) -> Tuple[complex, float, bool]:
        axis = np.linspace(-half_width, half_width, count)
        mu = center + axis[None, :] + 1j * axis[:, None]
        values = _ratio(mu, pts)
        k = np.unravel_index(np.argmin(values), values.shape)
        on_edge = any(index in (0, count - 1) for index in k)
        return complex(mu[k]), 2.0 * half_width / (count - 1), on_edge

    best, spacing, _ = search(middle, half, grid_resolution)
    shifts = 0
    while rounds > 0 and shifts < 500:
        candidate, finer, on_edge = search(best, 5.0 * spacing, 41)
        if on_edge:
            # minimum lies beyond the window: follow it at the current resolution
            best = candidate
            shifts += 1
            continue
        best, spacing = candidate, finer
        rounds -= 1

    radius = float(np.max(np.abs(pts - best)))
    return EnclosingCircle.from_center(best, radius)


REGION_KINDS = ("points", "polygon", "segment", "triangle", "rectangle", "circle")


@dataclass(frozen=True)
class SpectrumRegion:
    """
    Where an operator's spectrum is expected to live.

    ``points`` holds the defining points: the cloud or polygon vertices, the
    two segment endpoints, the three triangle vertices, the lower-left and
    upper-right rectangle corners, or the single circle center (with ``radius``).
    """
    kind: str
    points: Tuple[complex, ...]
    radius: float = 0.0

    def __post_init__(self):
        if self.kind not in REGION_KINDS:
            raise ValueError(f"Unknown region kind: {self.kind}")
        expected = {"segment": 2, "triangle": 3, "rectangle": 2, "circle": 1}.get(self.kind)
        if expected is not None and len(self.points) != expected:
            raise ValueError(f"{self.kind} region needs {expected} points, got {len(self.points)}")
        if not self.points:
            raise ValueError("Region needs at least one point")
        if self.radius < 0:
            raise ValueError("Circle radius must be non-negative")

    @classmethod
    def segment(cls, p: complex, q: complex) -> "SpectrumRegion":
        return cls("segment", (complex(p), complex(q)))

    @classmethod
    def triangle(cls, a: complex, b: complex, c: complex) -> "SpectrumRegion":
        return cls("triangle", (complex(a), complex(b), complex(c)))

    @classmethod
    def circle(cls, center: complex, radius: float) -> "SpectrumRegion":
        return cls("circle", (complex(center),), float(radius))

    @classmethod
    def rectangle(cls, lower_left: complex, upper_right: complex) -> "SpectrumRegion":
        lower_left, upper_right = complex(lower_left), complex(upper_right)
        if lower_left.real > upper_right.real or lower_left.imag > upper_right.imag:
            raise ValueError("Rectangle corners must be lower-left then upper-right")
        return cls("rectangle", (lower_left, upper_right))

    @classmethod
    def polygon(cls, vertices: Iterable[complex]) -> "SpectrumRegion":
        return cls("polygon", hull_vertices(vertices))

    def corner_points(self) -> Tuple[complex, ...]:
        """Points whose convex hull is the region (circles excluded)"""
        if self.kind == "rectangle":
            ll, ur = self.points
            return (ll, complex(ur.real, ll.imag), ur, complex(ll.real, ur.imag))
        if self.kind == "circle":
            return tuple(circle_points(self.points[0], self.radius, 64))
        return self.points

    @property
    def diameter(self) -> float:
        if self.kind == "circle":
            return 2.0 * self.radius
        v = np.asarray(self.corner_points())
        return float(np.max(np.abs(v[:, None] - v[None, :])))

    def to_polygon(self) -> SpectrumPolygon:
        """Hull of the region as a validated SpectrumPolygon (origin must be outside)"""
        return convex_hull(self.corner_points())

    def enclosing_circle(self) -> EnclosingCircle:
        if self.kind == "circle":
            return EnclosingCircle.from_center(self.points[0], self.radius)
        return optimal_circle(self.to_polygon())

    def distance(self, z) -> np.ndarray:
        """Euclidean distance from each z to the region (0 inside)"""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if self.kind == "circle":
            return np.maximum(np.abs(z - self.points[0]) - self.radius, 0.0)
        return _distance_to_hull(z, hull_vertices(self.corner_points()))

    def boundary_samples(self, count: int) -> np.ndarray:
        """Points spread over the region boundary, vertices included"""
        if self.kind == "circle":
            return circle_points(self.points[0], self.radius, count)
        vertices = hull_vertices(self.corner_points())
        if len(vertices) == 1:
            return np.asarray(vertices, dtype=complex)
        if len(vertices) == 2:
            return np.linspace(vertices[0], vertices[1], count)
        edges = [(vertices[i], vertices[(i + 1) % len(vertices)]) for i in range(len(vertices))]
        lengths = np.array([abs(b - a) for a, b in edges])
        counts = np.maximum(2, np.round(count * lengths / lengths.sum()).astype(int))
        return np.concatenate([np.linspace(a, b, k) for (a, b), k in zip(edges, counts)])


def _distance_to_hull(z: np.ndarray, vertices: Sequence[complex]) -> np.ndarray:
    v = np.asarray(vertices, dtype=complex)
    if len(v) == 1:
        return np.abs(z - v[0])
    a = v
    b = np.roll(v, -1) if len(v) > 2 else v[::-1]
    d = b - a
    # distance to every edge segment
    t = np.real((z[:, None] - a[None, :]) * np.conj(d)[None, :]) / np.abs(d)[None, :] ** 2
    t = np.clip(t, 0.0, 1.0)
    edge_distance = np.min(np.abs(z[:, None] - (a[None, :] + t * d[None, :])), axis=1)
    if len(v) == 2:
        return edge_distance
    cross = np.real(d)[None, :] * np.imag(z[:, None] - a[None, :]) - np.imag(d)[None, :] * np.real(z[:, None] - a[None, :])
    inside = np.all(cross >= 0.0, axis=1)
    return np.where(inside, 0.0, edge_distance)


def gsi_contraction(eigenvalues: Sequence[complex], mu: complex) -> float:
    """Spectral radius of I - A/mu given the eigenvalues of A"""
    if mu == 0:
        raise ValueError("mu must be nonzero")
    eigs = np.asarray(eigenvalues, dtype=complex)
    return float(np.max(np.abs(1.0 - eigs / mu)))


__all__ = [
    'ComplexPoint',
    'SpectrumPolygon',
    'EnclosingCircle',
    'SpectrumRegion',
    'REGION_KINDS',
    'circle_points',
    'hull_vertices',
    'convex_hull',
    'is_gsi_applicable',
    'circumcenter',
    'segment_optimal_circle',
    'optimal_circle',
    'brute_force_optimal',
    'gsi_contraction',
]
