"""
GCI Toolkit - VSIE Operator
Discretized volume singular integral equation for an isotropic dielectric body

Row i of the collocation system reads

    E_i + (1/3) chi_i E_i - h^3 sum_{j != i} K(x_i - x_j) chi_j E_j = E0_i

with chi = eps - 1 per cell and K the dyadic kernel k0^2 G + grad grad G.
The self cell contributes only through the 1/3 depolarization term.

Vectors are component-major: x.reshape(3, n, n, n), cells in C order.
Lengths are in vacuum wavelengths unless k0 says otherwise.
"""

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.fft
from scipy.sparse.linalg import LinearOperator
from loguru import logger

from core.config import config, Constants
from core.exceptions import (
    BodyOutsideGrid,
    DimensionMismatch,
    ExportTooLarge,
    InvalidProfile,
    NonTransverse,
    ZeroDistance,
    ZeroOffset,
)

# Unique components of the symmetric dyadic kernel
KERNEL_PAIRS: Tuple[Tuple[int, int], ...] = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))


class ProfileKind(Enum):
    HOMOGENEOUS_BALL = "HomogeneousBall"
    LAYERED_BALL = "LayeredBall"
    HOMOGENEOUS_CUBE = "HomogeneousCube"


def _segment_hits_origin(a: complex, b: complex) -> bool:
    cross = a.real * b.imag - a.imag * b.real
    return abs(cross) <= 1e-15 * max(abs(a), abs(b), 1.0) and (a * b.conjugate()).real <= 0.0


@dataclass(frozen=True)
class PermittivityProfile:
    """
    Relative permittivity of a scatterer centered at the origin.

    ``radius`` is the ball radius, or half the edge for a cube. The layered
    ball holds eps2 for r <= d2, rises linearly to eps1 at d1 and falls
    linearly back to 1 at the surface.
    """
    kind: ProfileKind
    radius: float
    eps: complex = 1.0 + 0.0j
    eps1: complex = 1.0 + 0.0j
    eps2: complex = 1.0 + 0.0j
    d1: float = 0.0
    d2: float = 0.0

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidProfile(f"Body size must be positive, got {self.radius}")
        if self.kind == ProfileKind.LAYERED_BALL:
            if not self.radius > self.d1 > self.d2 > 0:
                raise InvalidProfile(
                    f"Layered ball needs R > d1 > d2 > 0, got R={self.radius}, d1={self.d1}, d2={self.d2}")
            values = (self.eps2, self.eps1)
            pieces = ((self.eps2, self.eps1), (self.eps1, 1.0 + 0.0j))
        else:
            values = (self.eps,)
            pieces = ()
        for value in values:
            if value == 0:
                raise InvalidProfile("Permittivity must not vanish")
            if value.imag < 0:
                raise InvalidProfile(f"Passive media need Im eps >= 0, got {value}")
        for a, b in pieces:
            if _segment_hits_origin(complex(a), complex(b)):
                raise InvalidProfile(f"Permittivity passes through zero between {a} and {b}")

    @classmethod
    def homogeneous_ball(cls, eps: complex, radius: float) -> "PermittivityProfile":
        return cls(ProfileKind.HOMOGENEOUS_BALL, float(radius), eps=complex(eps))

    @classmethod
    def layered_ball(cls, eps1: complex, eps2: complex, d1: float, d2: float,
                     radius: float) -> "PermittivityProfile":
        return cls(ProfileKind.LAYERED_BALL, float(radius), eps1=complex(eps1), eps2=complex(eps2),
                   d1=float(d1), d2=float(d2))

    @classmethod
    def homogeneous_cube(cls, eps: complex, side: float) -> "PermittivityProfile":
        return cls(ProfileKind.HOMOGENEOUS_CUBE, float(side) / 2.0, eps=complex(eps))

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    @property
    def is_ball(self) -> bool:
        return self.kind != ProfileKind.HOMOGENEOUS_CUBE

    def breakpoint_values(self) -> Tuple[complex, ...]:
        """Permittivity values at the profile's corners, interior outward, surface value 1 excluded"""
        if self.kind == ProfileKind.LAYERED_BALL:
            return (self.eps2, self.eps1)
        return (self.eps,)

    def is_vacuum(self) -> bool:
        return all(value == 1 for value in self.breakpoint_values())

    def eps_at_radius(self, r) -> np.ndarray:
        """Ball permittivity as a function of distance from the center (1 outside)"""
        r = np.asarray(r, dtype=float)
        if self.kind == ProfileKind.LAYERED_BALL:
            t_inner = (r - self.d2) / (self.d1 - self.d2)
            t_outer = (r - self.d1) / (self.radius - self.d1)
            values = np.where(
                r <= self.d2, self.eps2,
                np.where(r <= self.d1, self.eps2 + (self.eps1 - self.eps2) * t_inner,
                         self.eps1 + (1.0 - self.eps1) * t_outer))
        else:
            values = np.full(r.shape, self.eps, dtype=complex)
        return np.where(r <= self.radius, values, 1.0 + 0.0j).astype(complex)

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        if self.kind == ProfileKind.HOMOGENEOUS_CUBE:
            return np.max(np.abs(points), axis=1) <= self.radius * (1 + 1e-12)
        return np.linalg.norm(points, axis=1) <= self.radius * (1 + 1e-12)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Complex eps at each row of an (M, 3) array of points"""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        inside = self.contains(points)
        if self.kind == ProfileKind.HOMOGENEOUS_CUBE:
            return np.where(inside, self.eps, 1.0 + 0.0j).astype(complex)
        r = np.minimum(np.linalg.norm(points, axis=1), self.radius)
        return np.where(inside, self.eps_at_radius(r), 1.0 + 0.0j).astype(complex)

    def electrical_size(self, k0: float = Constants.WAVENUMBER) -> float:
        """k0 times the body radius; well below 1 is the low-frequency regime"""
        return k0 * self.radius


@dataclass(frozen=True, eq=False)
class VoxelGrid:
    """n^3 cubic cells of edge h filling a box centered at the origin"""
    n_cells: int
    h: float
    chi: np.ndarray = field(repr=False)
    body_mask: np.ndarray = field(repr=False)

    @property
    def n_total(self) -> int:
        return self.n_cells ** 3

    @property
    def n_body(self) -> int:
        return int(np.count_nonzero(self.body_mask))

    @property
    def dim(self) -> int:
        return 3 * self.n_total

    @property
    def box_side(self) -> float:
        return self.n_cells * self.h

    @property
    def centers(self) -> np.ndarray:
        return cell_centers(self.n_cells, self.h)


def cell_centers(n_cells: int, h: float) -> np.ndarray:
    """(n^3, 3) cell-center coordinates in C order"""
    axis = (np.arange(n_cells) + 0.5) * h - n_cells * h / 2.0
    gx, gy, gz = np.meshgrid(axis, axis, axis, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])


def green(R: float, k0: float) -> complex:
    """Helmholtz Green's function exp(i k0 R) / (4 pi R)"""
    if R <= 0:
        raise ZeroDistance(f"Green's function needs R > 0, got {R}")
    return complex(np.exp(1j * k0 * R) / (4.0 * math.pi * R))


def _kernel_components(rx: np.ndarray, ry: np.ndarray, rz: np.ndarray, k0: float):
    """The six unique kernel components on arrays of offsets, zero where the offset vanishes"""
    R = np.sqrt(rx ** 2 + ry ** 2 + rz ** 2)
    zero = R == 0
    R_safe = np.where(zero, 1.0, R)
    G = np.exp(1j * k0 * R_safe) / (4.0 * math.pi * R_safe)
    diagonal = G * (k0 ** 2 + 1j * k0 / R_safe - 1.0 / R_safe ** 2)
    radial = G * (-k0 ** 2 - 3j * k0 / R_safe + 3.0 / R_safe ** 2)
    unit = (rx / R_safe, ry / R_safe, rz / R_safe)
    components = []
    for p, q in KERNEL_PAIRS:
        value = radial * unit[p] * unit[q]
        if p == q:
            value = value + diagonal
        components.append(np.where(zero, 0.0, value))
    return components


def dyadic_kernel(r: Sequence[float], k0: float) -> np.ndarray:
    """3x3 kernel K_pq(r) = k0^2 G delta_pq + d_p d_q G"""
    r = np.asarray(r, dtype=float)
    if not np.any(r):
        raise ZeroOffset("Dyadic kernel is singular at zero offset")
    components = _kernel_components(r[0:1], r[1:2], r[2:3], k0)
    K = np.empty((3, 3), dtype=complex)
    for (p, q), value in zip(KERNEL_PAIRS, components):
        K[p, q] = K[q, p] = value[0]
    return K


class VsieOperator:
    """
    Collocation matrix of the VSIE, applied with a zero-padded FFT convolution.

    Immutable after construction; ``matvec`` allocates its own work arrays and
    may be called from several threads.
    """

    def __init__(self, grid: VoxelGrid, k0: float, profile: Optional[PermittivityProfile] = None):
        start = time.perf_counter()
        self.grid = grid
        self.k0 = float(k0)
        self.profile = profile
        self.dtype = np.dtype(complex)
        self.shape = (grid.dim, grid.dim)
        self._chi = grid.chi.reshape((grid.n_cells,) * 3)
        self.fft_workers = config.getint("VSIE", "FFT_WORKERS", 1)
        self.kernel_spectrum = self._kernel_spectrum()
        self.build_seconds = time.perf_counter() - start
        logger.info(f"VSIE operator built: n={grid.n_cells}, dim={grid.dim}, "
                    f"body cells={grid.n_body}, k0={self.k0:.4g} in {self.build_seconds:.3f}s")

    def _kernel_spectrum(self) -> np.ndarray:
        n, h = self.grid.n_cells, self.grid.h
        index = np.arange(2 * n)
        index = np.where(index < n, index, index - 2 * n)
        offsets = index * h
        rx, ry, rz = np.meshgrid(offsets, offsets, offsets, indexing="ij")
        components = _kernel_components(rx, ry, rz, self.k0)
        spectrum = np.empty((len(KERNEL_PAIRS),) + (2 * n,) * 3, dtype=complex)
        for c, value in enumerate(components):
            # wrap-around slot holds no admissible offset
            value[n, :, :] = value[:, n, :] = value[:, :, n] = 0.0
            spectrum[c] = scipy.fft.fftn(value)
        return spectrum

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def memory_words(self) -> int:
        """Complex words held: kernel spectrum plus the contrast"""
        return int(self.kernel_spectrum.size + self.grid.chi.size)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        if x.size != self.dim:
            raise DimensionMismatch(f"Vector length {x.size} does not match operator dimension {self.dim}")
        n, h = self.grid.n_cells, self.grid.h
        v = x.reshape(3, n, n, n)
        w = v * self._chi
        W = scipy.fft.fftn(w, s=(2 * n,) * 3, axes=(1, 2, 3), workers=self.fft_workers)
        Y = np.zeros_like(W)
        for (p, q), K in zip(KERNEL_PAIRS, self.kernel_spectrum):
            Y[p] += K * W[q]
            if p != q:
                Y[q] += K * W[p]
        conv = scipy.fft.ifftn(Y, axes=(1, 2, 3), workers=self.fft_workers)[:, :n, :n, :n]
        return (v + w / 3.0 - h ** 3 * conv).ravel()

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.matvec(x)

    def as_linear_operator(self) -> LinearOperator:
        return LinearOperator(self.shape, matvec=self.matvec, dtype=self.dtype)

    def dense_matrix(self) -> np.ndarray:
        """Direct assembly from the closed-form kernel, independent of the FFT path"""
        N, h = self.grid.n_total, self.grid.h
        centers = self.grid.centers
        diff = centers[:, None, :] - centers[None, :, :]
        components = _kernel_components(diff[..., 0], diff[..., 1], diff[..., 2], self.k0)
        chi = self.grid.chi
        A = np.zeros((3 * N, 3 * N), dtype=complex)
        for (p, q), K in zip(KERNEL_PAIRS, components):
            block = -h ** 3 * K * chi[None, :]
            A[p * N:(p + 1) * N, q * N:(q + 1) * N] = block
            if p != q:
                A[q * N:(q + 1) * N, p * N:(p + 1) * N] = block
        A[np.diag_indices(3 * N)] += 1.0 + np.tile(chi, 3) / 3.0
        return A

    def export_dense_csv(self, path) -> None:
        """Row-major dense dump, each entry written as an re,im pair"""
        limit = config.getint("VSIE", "DENSE_EXPORT_LIMIT", 4000)
        if self.dim > limit:
            raise ExportTooLarge(f"Dense export limited to {limit} unknowns, operator has {self.dim}")
        A = self.dense_matrix()
        pairs = np.empty((A.shape[0], 2 * A.shape[1]))
        pairs[:, 0::2] = A.real
        pairs[:, 1::2] = A.imag
        pd.DataFrame(pairs).to_csv(path, header=False, index=False, float_format="%.17g")
        logger.info(f"Dense operator ({self.dim}x{self.dim}) written to {path}")

    def restrict_to_body(self, field: np.ndarray) -> np.ndarray:
        """(3, n_body) field values on the cells inside the scatterer"""
        field = np.asarray(field)
        if field.size != self.dim:
            raise DimensionMismatch(f"Field length {field.size} does not match operator dimension {self.dim}")
        return field.reshape(3, -1)[:, self.grid.body_mask]


def build_grid(profile: PermittivityProfile, n_cells: int, box_side: Optional[float] = None) -> VoxelGrid:
    """Voxel grid over the body's bounding cube; cells classified by their centers"""
    if n_cells < 2:
        raise BodyOutsideGrid(f"Grid needs at least 2 cells per axis, got {n_cells}")
    side = profile.diameter if box_side is None else float(box_side)
    if side < profile.diameter * (1 - 1e-12):
        raise BodyOutsideGrid(f"Body of diameter {profile.diameter} does not fit a box of side {side}")
    h = side / n_cells
    centers = cell_centers(n_cells, h)
    mask = profile.contains(centers)
    chi = np.where(mask, profile.evaluate(centers) - 1.0, 0.0).astype(complex)
    if not np.any(mask):
        logger.warning(f"No cell center falls inside the body at n={n_cells}")
    return VoxelGrid(n_cells=n_cells, h=h, chi=chi, body_mask=mask)


def build_operator(profile: PermittivityProfile, n_cells: int, k0: float = Constants.WAVENUMBER,
                   box_side: Optional[float] = None) -> VsieOperator:
    if not isinstance(profile, PermittivityProfile):
        raise InvalidProfile(f"Expected a PermittivityProfile, got {type(profile).__name__}")
    grid = build_grid(profile, n_cells, box_side)
    if profile.electrical_size(k0) > 1.0:
        logger.warning(f"Electrical size k0*R = {profile.electrical_size(k0):.3f}; "
                       f"spectrum may leave the low-frequency region")
    return VsieOperator(grid, k0, profile)


def fast_matvec(op: VsieOperator, x: np.ndarray) -> np.ndarray:
    return op.matvec(x)


def plane_wave_at(points: np.ndarray, k0: float, direction: Sequence[float],
                  polarization: Sequence[float]) -> np.ndarray:
    """(M, 3) plane-wave field p exp(i k0 d.x) at the given points"""
    d = np.asarray(direction, dtype=float)
    p = np.asarray(polarization, dtype=complex)
    if abs(np.dot(d, p)) > 1e-12:
        raise NonTransverse(f"Polarization {polarization} is not perpendicular to direction {direction}")
    phase = np.exp(1j * k0 * (np.atleast_2d(points) @ d))
    return phase[:, None] * p[None, :]


def incident_plane_wave(grid: VoxelGrid, k0: float, direction: Sequence[float] = (0.0, 0.0, 1.0),
                        polarization: Sequence[float] = (1.0, 0.0, 0.0)) -> np.ndarray:
    """Incident field on every cell, stacked component-major into a 3 n^3 vector"""
    values = plane_wave_at(grid.centers, k0, direction, polarization)
    return values.T.ravel()


__all__ = [
    'ProfileKind',
    'PermittivityProfile',
    'VoxelGrid',
    'VsieOperator',
    'KERNEL_PAIRS',
    'cell_centers',
    'green',
    'dyadic_kernel',
    'build_grid',
    'build_operator',
    'fast_matvec',
    'plane_wave_at',
    'incident_plane_wave',
]
