"""Periodic grids, scaled Fourier transforms, and frequency-space operators.

Fourier convention: ``F(kappa) = sum_x f(x) exp(-i 2 pi x . kappa) h^d`` with
``kappa`` in cycles per unit length, so the coefficients approximate the
continuum transform of box-supported data.  Every frequency *magnitude* used
by the symbol formulas and cutoffs is the angular one, ``|xi| = 2 pi |kappa|``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Grid",
    "RealField",
    "SpectralField",
    "CutoffProfile",
    "fft_workers",
    "transform_forward",
    "transform_inverse",
    "derivative",
    "project",
    "split",
    "sobolev_norm",
    "hk_norm",
    "linf_gradient",
    "physical_l2_norm",
]

HERMITIAN_TOL = 1e-12


def fft_workers() -> int:
    """Thread count for the FFT backend, capped by the ``THREADS`` env var.

    pocketfft only splits independent 1D transforms across threads, so the
    output does not depend on this value.
    """
    env = os.environ.get("THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic box ``[0, L)^d`` with ``N`` points per axis."""

    d: int
    N: int
    L: float

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.d}")
        if self.N < 4 or not _is_power_of_two(self.N):
            raise ValueError(f"N must be a power of two >= 4, got {self.N}")
        if not (self.L > 0 and np.isfinite(self.L)):
            raise ValueError(f"box length must be positive, got {self.L}")
        object.__setattr__(self, "L", float(self.L))

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    @property
    def half_shape(self) -> tuple[int, ...]:
        """Shape of the real-to-complex (rfft) coefficient layout."""
        return (self.N,) * (self.d - 1) + (self.N // 2 + 1,)

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    @property
    def volume(self) -> float:
        return self.L**self.d

    @property
    def xi_nyquist(self) -> float:
        """Largest angular frequency resolved along one axis, pi N / L."""
        return np.pi * self.N / self.L

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(-self.d, 0))

    def coordinates(self) -> list[np.ndarray]:
        """Broadcastable per-axis sample coordinates ``x_j = j h``."""
        x = np.arange(self.N) * self.h
        return [x.reshape(self._axis_shape(j)) for j in range(self.d)]

    def _axis_shape(self, j: int) -> tuple[int, ...]:
        s = [1] * self.d
        s[j] = -1
        return tuple(s)

    @cached_property
    def _index_full(self) -> np.ndarray:
        return np.fft.fftfreq(self.N, d=1.0 / self.N).astype(int)

    def _indices(self, half: bool) -> list[np.ndarray]:
        out = []
        for j in range(self.d):
            if half and j == self.d - 1:
                idx = np.arange(self.N // 2 + 1)
            else:
                idx = self._index_full
            out.append(idx.reshape(self._axis_shape(j)))
        return out

    def wavevector(self, half: bool = False, odd: bool = False) -> list[np.ndarray]:
        """Angular wavevector components ``xi_j = 2 pi kappa_j``, broadcastable.

        ``odd=True`` zeroes the Nyquist component, the multiplier used for
        odd-order derivatives so that real data stays exactly real.
        """
        out = []
        for idx in self._indices(half):
            xi = 2.0 * np.pi * idx / self.L
            if odd:
                xi = np.where(np.abs(idx) == self.N // 2, 0.0, xi)
            out.append(xi)
        return out

    def xi_squared(self, half: bool = False, odd: bool = False) -> np.ndarray:
        xi = self.wavevector(half=half, odd=odd)
        total = np.zeros(self.half_shape if half else self.shape)
        for c in xi:
            total = total + c * c
        return total

    def dealias_mask(self, half: bool = False) -> np.ndarray:
        """Two-thirds rule: keep modes with ``|index_j| < N/3`` on every axis."""
        keep = np.ones(self.half_shape if half else self.shape, dtype=bool)
        for idx in self._indices(half):
            keep = keep & (3 * np.abs(idx) < self.N)
        return keep


@dataclass(frozen=True)
class RealField:
    """Samples of a ``c``-component field, array shape ``(c, N, ..., N)``."""

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.shape == self.grid.shape:
            data = data[None]
        if data.shape[1:] != self.grid.shape:
            raise ValueError(f"field shape {data.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "data", data)

    @property
    def components(self) -> int:
        return self.data.shape[0]

    def check_finite(self) -> None:
        bad = ~np.isfinite(self.data)
        if bad.any():
            first = tuple(int(i) for i in np.argwhere(bad)[0])
            raise ValueError(f"non-finite sample {self.data[first]!r} at index {first}")


@dataclass(frozen=True)
class SpectralField:
    """Full-lattice Fourier coefficients, array shape ``(c, N, ..., N)``."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if coeffs.shape == self.grid.shape:
            coeffs = coeffs[None]
        if coeffs.shape[1:] != self.grid.shape:
            raise ValueError(f"coefficient shape {coeffs.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def components(self) -> int:
        return self.coeffs.shape[0]

    def reflected(self) -> np.ndarray:
        """Coefficients at ``-kappa`` for each lattice point ``kappa``."""
        out = self.coeffs
        for ax in self.grid.axes:
            out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
        return out

    def hermitian_defect(self) -> float:
        scale = np.max(np.abs(self.coeffs), initial=0.0)
        if scale == 0.0:
            return 0.0
        return float(np.max(np.abs(self.coeffs - np.conj(self.reflected()))) / scale)


def transform_forward(f: RealField) -> SpectralField:
    f.check_finite()
    g = f.grid
    coeffs = sfft.fftn(f.data, axes=g.axes, workers=fft_workers()) * g.cell_volume
    return SpectralField(g, coeffs)


def transform_inverse(F: SpectralField) -> RealField:
    """Inverse of :func:`transform_forward`; rejects non-Hermitian input."""
    defect = F.hermitian_defect()
    if defect > HERMITIAN_TOL:
        raise ValueError(f"coefficients are not Hermitian-symmetric (relative defect {defect:.3e})")
    g = F.grid
    data = sfft.ifftn(F.coeffs, axes=g.axes, workers=fft_workers()).real / g.cell_volume
    return RealField(g, data)


def derivative(F: SpectralField, alpha) -> SpectralField:
    """Apply ``D^alpha`` by the multiplier ``prod_j (i xi_j)^alpha_j``.

    The Nyquist plane of every axis differentiated an odd number of times is
    zeroed (per axis rather than by total order, which also covers mixed
    derivatives such as d1 d2).
    """
    alpha = tuple(int(a) for a in alpha)
    g = F.grid
    if len(alpha) != g.d or min(alpha) < 0:
        raise ValueError(f"multi-index {alpha} invalid for dimension {g.d}")
    if sum(alpha) > 4:
        raise ValueError(f"derivative order {sum(alpha)} exceeds 4")
    full = g.wavevector()
    odd = g.wavevector(odd=True)
    mult = np.ones(g.shape, dtype=complex)
    for j, aj in enumerate(alpha):
        if aj:
            xi = odd[j] if aj % 2 else full[j]
            mult = mult * (1j * xi) ** aj
    return SpectralField(g, F.coeffs * mult)


@dataclass(frozen=True)
class CutoffProfile:
    """Low-frequency cutoff ``chi_1(|xi|)`` on the angular frequency magnitude.

    ``sharp``: indicator of ``|xi| <= r0`` (``R0`` is reset to ``r0``).
    ``smooth``: 1 below ``r0``, 0 above ``R0``, raised cosine in between.
    """

    r0: float = 0.25
    R0: float = 0.45
    kind: str = "smooth"

    def __post_init__(self):
        if not 0.0 < self.r0 < 0.5:
            raise ValueError(f"r0 must lie in (0, 1/2), got {self.r0}")
        if self.kind == "sharp":
            object.__setattr__(self, "R0", float(self.r0))
        elif self.kind == "smooth":
            if not self.R0 > self.r0:
                raise ValueError(f"R0 must exceed r0, got r0={self.r0}, R0={self.R0}")
        else:
            raise ValueError(f"cutoff kind must be 'sharp' or 'smooth', got {self.kind!r}")

    def low_weight(self, xi_mag) -> np.ndarray:
        xi_mag = np.asarray(xi_mag, dtype=float)
        if self.kind == "sharp":
            return np.where(xi_mag <= self.r0, 1.0, 0.0)
        s = np.clip((xi_mag - self.r0) / (self.R0 - self.r0), 0.0, 1.0)
        return 0.5 * (1.0 + np.cos(np.pi * s))

    def high_weight(self, xi_mag) -> np.ndarray:
        return 1.0 - self.low_weight(xi_mag)

    def check_resolved(self, grid: Grid) -> None:
        if not self.R0 < grid.xi_nyquist:
            raise ValueError(
                f"cutoff R0={self.R0} is not resolved: must be below the grid Nyquist "
                f"frequency pi*N/L={grid.xi_nyquist:.6g}"
            )


def split(F: SpectralField, cutoff: CutoffProfile) -> tuple[SpectralField, SpectralField]:
    """Low and high parts whose sum reproduces ``F`` bit for bit."""
    g = F.grid
    cutoff.check_resolved(g)
    chi = cutoff.low_weight(np.sqrt(g.xi_squared()))
    # high = F - chi F, then low = F - high: makes low + high == F exactly
    high = F.coeffs - chi * F.coeffs
    low = F.coeffs - high
    return SpectralField(g, low), SpectralField(g, high)


def project(F: SpectralField, cutoff: CutoffProfile, part: str) -> SpectralField:
    low, high = split(F, cutoff)
    if part == "low":
        return low
    if part == "high":
        return high
    raise ValueError(f"part must be 'low' or 'high', got {part!r}")


def _sum_sq(coeffs: np.ndarray, weight: np.ndarray | None) -> float:
    sq = coeffs.real**2 + coeffs.imag**2
    if weight is not None:
        sq = sq * weight
    # pairwise reduction over a contiguous 1D view: fixed order, thread-independent
    return float(np.sum(np.ascontiguousarray(sq).ravel()))


def sobolev_norm(F: SpectralField, k: int) -> float:
    """``||D^k f||_{L^2}`` by Parseval, summed over components."""
    if not 0 <= k <= 3:
        raise ValueError(f"order must be in 0..3, got {k}")
    g = F.grid
    weight = None if k == 0 else g.xi_squared() ** k
    return float(np.sqrt(_sum_sq(F.coeffs, weight) / g.volume))


def hk_norm(F: SpectralField, k: int) -> float:
    """Full ``H^k`` norm: root-sum-square of the seminorms of order 0..k."""
    return float(np.sqrt(sum(sobolev_norm(F, j) ** 2 for j in range(k + 1))))


def physical_l2_norm(f: RealField) -> float:
    """Quadrature ``L^2`` norm in physical space (Parseval cross-check)."""
    return float(np.sqrt(_sum_sq(f.data, None) * f.grid.cell_volume))


def linf_gradient(f: RealField) -> float:
    """Max over grid points of the Euclidean norm of all spectral partials."""
    g = f.grid
    fh = sfft.fftn(f.data, axes=g.axes, workers=fft_workers())
    total = np.zeros(g.shape)
    for xi in g.wavevector(odd=True):
        d = sfft.ifftn(1j * xi * fh, axes=g.axes, workers=fft_workers()).real
        total += np.sum(d * d, axis=0)
    return float(np.sqrt(total.max()))
