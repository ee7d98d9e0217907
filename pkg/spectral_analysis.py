"""
GCI Toolkit - Spectral Analysis
Eigenvalues of assembled VSIE matrices and the regions that should contain them

For an isotropic body the continuous spectrum is the set of permittivity
values eps(x) together with the surface value 1. In the low-frequency regime
the whole spectrum lies in the convex hull of that set; a resonance-size body
may put eigenvalues outside it.
"""

from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.linalg
from scipy.spatial.distance import directed_hausdorff
from loguru import logger

from core.config import config, Constants
from core.exceptions import ConvergenceFailure, InvalidRange, NonSquare
from spectrum_geometry import SpectrumPolygon, SpectrumRegion, convex_hull, hull_vertices
from vsie_operator import PermittivityProfile, ProfileKind, build_operator


@dataclass(frozen=True)
class SpectrumReport:
    """Eigenvalues classified against a region dilated by ``band``"""
    eigenvalues: Tuple[complex, ...]
    region: SpectrumRegion
    band: float
    containment_fraction: float
    outliers: Tuple[complex, ...]

    @property
    def n_outliers(self) -> int:
        return len(self.outliers)

    def to_dict(self) -> dict:
        return {
            "n_eigenvalues": len(self.eigenvalues),
            "region": {
                "kind": self.region.kind,
                "points": [[p.real, p.imag] for p in self.region.points],
                "radius": self.region.radius,
            },
            "band": self.band,
            "containment_fraction": self.containment_fraction,
            "outliers": [[z.real, z.imag] for z in self.outliers],
        }


def dense_eigenvalues(matrix: np.ndarray) -> List[complex]:
    """
    All eigenvalues of a dense complex matrix.

    The result is checked against the trace, and against the LU determinant
    for matrices of dimension up to 50.
    """
    A = np.asarray(matrix, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NonSquare(f"Expected a square matrix, got shape {A.shape}")
    dim = A.shape[0]
    limit = config.getint("SPECTRUM", "MAX_DENSE_DIM", 6000)
    if dim > limit:
        logger.warning(f"Dense eigensolve of dimension {dim} exceeds {limit}")

    try:
        eigs = scipy.linalg.eigvals(A)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise ConvergenceFailure(f"Eigensolver failed: {e}") from e
    if not np.all(np.isfinite(eigs)):
        raise ConvergenceFailure("Eigensolver returned non-finite values")

    trace = np.trace(A)
    scale = max(abs(trace), float(np.sum(np.abs(eigs))), 1.0)
    if abs(np.sum(eigs) - trace) > 1e-8 * scale:
        raise ConvergenceFailure(f"Eigenvalue sum {np.sum(eigs)} does not match trace {trace}")
    if dim <= 50:
        det = scipy.linalg.det(A)
        product = np.prod(eigs)
        if abs(product - det) > 1e-6 * max(abs(det), 1e-300):
            raise ConvergenceFailure(f"Eigenvalue product {product} does not match determinant {det}")

    logger.debug(f"Dense eigensolve of dimension {dim} done")
    return [complex(z) for z in eigs]


def _unique(values: Iterable[complex]) -> List[complex]:
    seen, result = set(), []
    for value in values:
        key = (round(value.real, 12), round(value.imag, 12))
        if key not in seen:
            seen.add(key)
            result.append(complex(value))
    return result


def continuous_spectrum_locus(profile: PermittivityProfile, samples: Optional[int] = None) -> List[complex]:
    """Values eps(x) over the body, radially swept for balls, with the boundary value 1 appended"""
    samples = samples or config.getint("SPECTRUM", "LOCUS_SAMPLES", 200)
    if profile.kind == ProfileKind.LAYERED_BALL:
        radii = np.union1d(np.linspace(0.0, profile.radius, samples), [profile.d2, profile.d1])
        values = profile.eps_at_radius(radii)
    else:
        values = np.asarray(profile.breakpoint_values(), dtype=complex)
    return _unique(list(values) + [1.0 + 0.0j])


def low_frequency_region(profile: PermittivityProfile) -> SpectrumPolygon:
    """Convex hull of the continuous-spectrum locus, the predicted home of the static spectrum"""
    return convex_hull(continuous_spectrum_locus(profile))


def profile_region(profile: PermittivityProfile) -> SpectrumRegion:
    """Low-frequency region as a typed descriptor: point, segment [1, eps] or triangle (1, eps2, eps1)"""
    values = profile.breakpoint_values()
    if profile.is_vacuum():
        return SpectrumRegion(Constants.REGION_POINTS, (1.0 + 0.0j,))
    if len(values) == 1 or values[0] == values[1]:
        return SpectrumRegion.segment(1.0, values[0])
    if len(hull_vertices((1.0, values[0], values[1]))) == 3:
        return SpectrumRegion.triangle(1.0, values[0], values[1])
    return SpectrumRegion.polygon((1.0, values[0], values[1]))


def anisotropic_rectangle(delta1_range: Sequence[float], delta2_range: Sequence[float]) -> SpectrumRegion:
    """Rectangle with lower-left (A1_min, A2_min) and upper-right (A1_max, A2_max)"""
    lo1, hi1 = delta1_range
    lo2, hi2 = delta2_range
    if lo1 > hi1 or lo2 > hi2:
        raise InvalidRange(f"Ranges must be [min, max], got {delta1_range} and {delta2_range}")
    return SpectrumRegion.rectangle(complex(lo1, lo2), complex(hi1, hi2))


def hermitian_parts_eigranges(tensor_field_samples: Sequence[np.ndarray]
                              ) -> Tuple[Tuple[float, float], Tuple[float, float]]:
    """Global eigenvalue ranges of (eps + eps^*)/2 and (eps - eps^*)/2i over the samples"""
    tensors = np.asarray(tensor_field_samples, dtype=complex).reshape(-1, 3, 3)
    adjoint = np.conj(np.swapaxes(tensors, -1, -2))
    delta1 = (tensors + adjoint) / 2.0
    delta2 = (tensors - adjoint) / 2j
    eigs1 = np.linalg.eigvalsh(delta1)
    eigs2 = np.linalg.eigvalsh(delta2)
    return ((float(eigs1.min()), float(eigs1.max())), (float(eigs2.min()), float(eigs2.max())))


def default_band(region: SpectrumRegion) -> float:
    return config.getfloat("SPECTRUM", "BAND_FRACTION", 0.15) * region.diameter


def containment_check(eigenvalues: Sequence[complex], region: SpectrumRegion, band: float) -> SpectrumReport:
    if band < 0:
        raise InvalidRange(f"Containment band must be non-negative, got {band}")
    eigs = np.asarray(eigenvalues, dtype=complex).ravel()
    scale = max(region.diameter, float(np.max(np.abs(region.corner_points()))), 1.0)
    inside = region.distance(eigs) <= band + 1e-12 * scale
    fraction = float(np.mean(inside)) if eigs.size else 1.0
    outliers = tuple(complex(z) for z in eigs[~inside])
    report = SpectrumReport(tuple(complex(z) for z in eigs), region, float(band), fraction, outliers)
    logger.info(f"Containment in {region.kind} (band {band:.3g}): {fraction:.4f}, {len(outliers)} outliers")
    return report


def hausdorff_distance(a: Sequence[complex], b: Sequence[complex]) -> float:
    """Symmetric Hausdorff distance between two finite point sets of the complex plane"""
    pa = np.column_stack([np.real(a), np.imag(a)])
    pb = np.column_stack([np.real(b), np.imag(b)])
    return float(max(directed_hausdorff(pa, pb)[0], directed_hausdorff(pb, pa)[0]))


def operator_spectrum(profile: PermittivityProfile, n_cells: int,
                      k0: float = Constants.WAVENUMBER) -> List[complex]:
    return dense_eigenvalues(build_operator(profile, n_cells, k0).dense_matrix())


def k0_sweep_spectrum_drift(profile: PermittivityProfile, n_cells: int,
                            k0_list: Sequence[float]) -> List[Tuple[float, float]]:
    """Hausdorff distance between the spectra at each k0 and at k0 = 0 on a fixed grid"""
    k0_list = [float(k0) for k0 in k0_list]
    if any(k0 < 0 for k0 in k0_list):
        raise InvalidRange("Wavenumbers must be non-negative")
    if any(a < b for a, b in zip(k0_list, k0_list[1:])):
        raise InvalidRange("Wavenumbers must be sorted in descending order")

    static = operator_spectrum(profile, n_cells, 0.0)
    drifts = []
    for k0 in k0_list:
        drift = 0.0 if k0 == 0 else hausdorff_distance(operator_spectrum(profile, n_cells, k0), static)
        logger.debug(f"k0={k0:.4g}: spectrum drift {drift:.3e}")
        drifts.append((k0, drift))
    return drifts


def spectrum_report(profile: PermittivityProfile, n_cells: int, k0: float = Constants.WAVENUMBER,
                    region: Optional[SpectrumRegion] = None, band: Optional[float] = None) -> SpectrumReport:
    """Assemble, eigensolve and classify against the low-frequency region (or an override)"""
    region = region or profile_region(profile)
    band = default_band(region) if band is None else band
    return containment_check(operator_spectrum(profile, n_cells, k0), region, band)


def write_eigenvalues_csv(path, eigenvalues: Sequence[complex]) -> None:
    """``re,im`` CSV, one eigenvalue per line"""
    eigs = np.asarray(eigenvalues, dtype=complex)
    digits = config.getint("BENCH", "SIGNIFICANT_DIGITS", 17)
    pd.DataFrame({"re": eigs.real, "im": eigs.imag}).to_csv(path, index=False, float_format=f"%.{digits}g")
    logger.info(f"{eigs.size} eigenvalues written to {path}")


def layered_ball_family(eps2: complex, eps1: complex, ratios: Sequence[Tuple[float, float]],
                        radius: float) -> List[PermittivityProfile]:
    """Layered balls sharing eps2, eps1 with (d2/R, d1/R) taken from ``ratios``"""
    return [PermittivityProfile.layered_ball(eps1, eps2, d1=r1 * radius, d2=r2 * radius, radius=radius)
            for r2, r1 in ratios]


__all__ = [
    'SpectrumReport',
    'dense_eigenvalues',
    'continuous_spectrum_locus',
    'low_frequency_region',
    'profile_region',
    'anisotropic_rectangle',
    'hermitian_parts_eigranges',
    'default_band',
    'containment_check',
    'hausdorff_distance',
    'operator_spectrum',
    'k0_sweep_spectrum_drift',
    'spectrum_report',
    'write_eigenvalues_csv',
    'layered_ball_family',
]
