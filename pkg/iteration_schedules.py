"""
GCI Toolkit - Iteration Schedules
GSI / GCI parameter sets for the spectrum shapes with known or heuristic solutions

A schedule is one GCI layer: parameters tau_1..tau_n applied in order, the
layer being repeated until convergence. The per-layer contraction is
max_z |prod_m (1 - tau_m z)| over the spectrum region.

Supported shapes:
- circle: all parameters equal the GSI parameter 1/mu0
- real segment [a, b]: Chebyshev roots
- complex segment anchored at (1, 0): real Chebyshev roots rotated onto the segment
- triangle with a vertex at (1, 0): rotated-segment parameters on the two sides
  through (1, 0), interleaved
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from core.config import config
from core.exceptions import (
    DegenerateSegment,
    InvalidSchedule,
    InvalidSegment,
    InvalidTriangle,
    OriginInsideHull,
)
from spectrum_geometry import EnclosingCircle, SpectrumRegion, convex_hull


class ScheduleProvenance(Enum):
    """How a schedule was constructed"""
    GSI = "Gsi"
    REAL_SEGMENT = "RealSegment"
    ROTATED_SEGMENT = "RotatedSegment"
    CIRCLE = "Circle"
    TRIANGLE_SIDES = "TriangleSides"
    MANUAL = "Manual"


@dataclass(frozen=True)
class IterationSchedule:
    """One GCI layer of complex iteration parameters"""
    taus: Tuple[complex, ...]
    provenance: ScheduleProvenance
    rho_bound: Optional[float] = None
    mus: Tuple[complex, ...] = field(default=())

    def __post_init__(self):
        if len(self.taus) < 1:
            raise InvalidSchedule("A schedule needs at least one parameter")
        if any(tau == 0 for tau in self.taus):
            raise InvalidSchedule("Iteration parameters must not vanish")
        if not self.mus:
            object.__setattr__(self, "mus", tuple(1.0 / complex(tau) for tau in self.taus))
        elif len(self.mus) != len(self.taus):
            raise InvalidSchedule("mus and taus differ in length")
        else:
            for m, (mu, tau) in enumerate(zip(self.mus, self.taus)):
                if abs(complex(mu) * complex(tau) - 1.0) > 1e-14:
                    raise InvalidSchedule(f"mus[{m}] * taus[{m}] = {mu * tau} is not 1")

    @classmethod
    def from_mus(cls, mus: Iterable[complex], provenance: ScheduleProvenance,
                 rho_bound: Optional[float] = None) -> "IterationSchedule":
        mus = tuple(complex(mu) for mu in mus)
        if any(mu == 0 for mu in mus):
            raise InvalidSchedule("Parameter mu = 0 has no reciprocal")
        return cls(taus=tuple(1.0 / mu for mu in mus), provenance=provenance,
                   rho_bound=rho_bound, mus=mus)

    @property
    def n(self) -> int:
        return len(self.taus)

    def tau_array(self) -> np.ndarray:
        return np.asarray(self.taus, dtype=complex)

    def layer_polynomial(self, z) -> np.ndarray:
        """prod_m (1 - tau_m z) evaluated elementwise"""
        z = np.asarray(z, dtype=complex)
        value = np.ones_like(z)
        for tau in self.taus:
            value = value * (1.0 - tau * z)
        return value

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "provenance": self.provenance.value,
            "rho_bound": self.rho_bound,
            "schedule": [{"tau_re": t.real, "tau_im": t.imag} for t in self.taus],
        }


def _boundary_samples() -> int:
    return config.getint("SCHEDULES", "BOUNDARY_SAMPLES", 10000)


def _check_layer_length(n: int):
    if n < 1:
        raise InvalidSchedule(f"Layer length must be at least 1, got {n}")
    limit = config.getint("SCHEDULES", "MAX_LAYER_LENGTH", 16)
    if n > limit:
        logger.warning(f"Layer length {n} exceeds {limit}; natural parameter order may be unstable")


def minimax_value(schedule: IterationSchedule, region_samples: Sequence[complex]) -> float:
    """Per-layer contraction estimate max_z |prod_m (1 - tau_m z)| over the samples"""
    samples = np.asarray(region_samples, dtype=complex).ravel()
    if samples.size == 0:
        raise ValueError("minimax_value needs at least one sample")
    return float(np.max(np.abs(schedule.layer_polynomial(samples))))


def gsi_schedule(circle: EnclosingCircle) -> IterationSchedule:
    """Single GSI parameter tau = 1/mu0"""
    return IterationSchedule.from_mus([circle.center], ScheduleProvenance.GSI, rho_bound=circle.rho0)


def chebyshev_nodes(a: float, b: float, n: int) -> np.ndarray:
    """mu_m = (b+a)/2 + (b-a)/2 cos((2m-1) pi / 2n), m = 1..n"""
    m = np.arange(1, n + 1)
    return (b + a) / 2.0 + (b - a) / 2.0 * np.cos((2 * m - 1) * np.pi / (2 * n))


def chebyshev_real_segment(a: float, b: float, n: int) -> IterationSchedule:
    """Chebyshev parameters for a spectrum on the real segment [a, b], b > a > 0"""
    if not (a > 0 and b > a):
        raise InvalidSegment(f"Real segment needs b > a > 0, got a={a}, b={b}")
    _check_layer_length(n)
    mus = chebyshev_nodes(a, b, n)
    schedule = IterationSchedule.from_mus(mus, ScheduleProvenance.REAL_SEGMENT)
    samples = np.linspace(a, b, _boundary_samples())
    return _with_bound(schedule, samples)


def beam_segment_schedule(a: float, b: float, phi: float, n: int) -> IterationSchedule:
    """Chebyshev parameters for a spectrum on a segment of the beam arg z = phi"""
    base = chebyshev_real_segment(a, b, n)
    rotation = np.exp(1j * phi)
    mus = np.asarray(base.mus) * rotation
    schedule = IterationSchedule.from_mus(mus, ScheduleProvenance.REAL_SEGMENT)
    return _with_bound(schedule, np.linspace(a, b, _boundary_samples()) * rotation)


def rotated_segment_schedule(endpoint: complex, n: int, anchor: complex = 1.0 + 0.0j) -> IterationSchedule:
    """
    Heuristic parameters for a spectrum on the complex segment [anchor, endpoint].

    Chebyshev parameters of the real segment [1, 1 + l], l = |endpoint - anchor|,
    are turned around the anchor until the real segment merges with the
    complex one.
    """
    endpoint, anchor = complex(endpoint), complex(anchor)
    offset = endpoint - anchor
    length = abs(offset)
    if length == 0.0:
        raise DegenerateSegment(f"Segment [{anchor}, {endpoint}] has zero length")
    _check_layer_length(n)
    phi = math.atan2(offset.imag, offset.real)
    real_mus = chebyshev_nodes(1.0, 1.0 + length, n)
    mus = anchor + (real_mus - 1.0) * np.exp(1j * phi)
    if np.any(mus == 0):
        raise InvalidSchedule(f"Segment [{anchor}, {endpoint}] puts a parameter at the origin")
    schedule = IterationSchedule.from_mus(mus, ScheduleProvenance.ROTATED_SEGMENT)
    return _with_bound(schedule, np.linspace(anchor, endpoint, _boundary_samples()))


def circle_schedule(circle: EnclosingCircle, n: int) -> IterationSchedule:
    """All n parameters equal 1/mu0; layer contraction (R / |mu0|)^n"""
    _check_layer_length(n)
    return IterationSchedule.from_mus([circle.center] * n, ScheduleProvenance.CIRCLE,
                                      rho_bound=circle.rho0 ** n)


def triangle_sides_schedule(v1: complex, v2: complex, n: int,
                            apex: complex = 1.0 + 0.0j) -> IterationSchedule:
    """
    Heuristic parameters for a spectrum in the triangle (apex, v1, v2).

    ceil(n/2) parameters go on the side apex->v1 and floor(n/2) on apex->v2,
    each by the rotated-segment rule; the two lists alternate within the layer.
    """
    v1, v2, apex = complex(v1), complex(v2), complex(apex)
    if n < 2:
        raise InvalidTriangle(f"Triangle schedule needs n >= 2, got {n}")
    if v1 == apex or v2 == apex:
        raise InvalidTriangle(f"Triangle vertices must differ from the apex {apex}")
    try:
        convex_hull([apex, v1, v2])
    except OriginInsideHull as e:
        raise InvalidTriangle(str(e)) from e

    if v1 == v2:
        # coincident sides: the triangle is the segment itself
        single = rotated_segment_schedule(v1, n, anchor=apex)
        return IterationSchedule.from_mus(single.mus, ScheduleProvenance.TRIANGLE_SIDES,
                                          rho_bound=single.rho_bound)

    _check_layer_length(n)
    n1, n2 = (n + 1) // 2, n // 2
    side1 = rotated_segment_schedule(v1, n1, anchor=apex).mus
    side2 = rotated_segment_schedule(v2, n2, anchor=apex).mus
    mus = []
    for k in range(n1):
        mus.append(side1[k])
        if k < n2:
            mus.append(side2[k])

    schedule = IterationSchedule.from_mus(mus, ScheduleProvenance.TRIANGLE_SIDES)
    region = SpectrumRegion.triangle(apex, v1, v2)
    return _with_bound(schedule, region.boundary_samples(_boundary_samples()))


def manual_schedule(taus: Iterable[complex]) -> IterationSchedule:
    """User-supplied parameters, no contraction estimate"""
    return IterationSchedule(taus=tuple(complex(t) for t in taus), provenance=ScheduleProvenance.MANUAL)


def _with_bound(schedule: IterationSchedule, samples: np.ndarray) -> IterationSchedule:
    return IterationSchedule(taus=schedule.taus, provenance=schedule.provenance,
                             rho_bound=minimax_value(schedule, samples), mus=schedule.mus)


def schedule_for_region(region: SpectrumRegion, n: int) -> Tuple[IterationSchedule, EnclosingCircle]:
    """
    Pick the schedule constructor by region kind.

    Returns the schedule together with the region's optimal GSI circle, which
    every artifact reports alongside the schedule.
    """
    circle = region.enclosing_circle()
    kind = region.kind

    if kind == "segment":
        p, q = region.points
        if p.imag == 0 and q.imag == 0 and min(p.real, q.real) > 0:
            schedule = chebyshev_real_segment(min(p.real, q.real), max(p.real, q.real), n)
        else:
            schedule = rotated_segment_schedule(q, n, anchor=p)
    elif kind == "circle":
        schedule = circle_schedule(circle, n)
    elif kind == "triangle" and n >= 2:
        apex, v1, v2 = region.points
        schedule = triangle_sides_schedule(v1, v2, n, apex=apex)
    elif n == 1:
        schedule = gsi_schedule(circle)
    else:
        schedule = circle_schedule(circle, n)

    logger.debug(f"{kind} region -> {schedule.provenance.value} schedule, n={schedule.n}, "
                 f"rho_bound={schedule.rho_bound}")
    return schedule, circle


__all__ = [
    'ScheduleProvenance',
    'IterationSchedule',
    'minimax_value',
    'gsi_schedule',
    'chebyshev_nodes',
    'chebyshev_real_segment',
    'beam_segment_schedule',
    'rotated_segment_schedule',
    'circle_schedule',
    'triangle_sides_schedule',
    'manual_schedule',
    'schedule_for_region',
]
