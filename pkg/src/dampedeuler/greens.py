"""Fourier symbol of the linearized damped system and its decay properties.

The linear operator acting on ``U = (a, u)`` has symbol

    L(xi) = [[0, i xi^T], [i xi, I]]

and the Green symbol is ``G(t, xi) = exp(-t L(xi))``.  Its non-trivial
eigenvalues are the roots of ``lambda^2 + lambda + |xi|^2 = 0``.  All scalar
coefficient functions are evaluated in real arithmetic with separate
treatment of the real, (near-)degenerate and complex branches.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._fit import power_law_fit
from .spectral import CutoffProfile, Grid, SpectralField

__all__ = [
    "EigenPair",
    "GreenSymbol",
    "MultiplierFit",
    "eigenvalues",
    "divided_difference",
    "branch_functions",
    "symbol_matrix",
    "generator_matrix",
    "symbol_on",
    "assemble_symbol",
    "apply_semigroup",
    "verify_multiplier_bound",
    "EXPECTED_SLOPE_OFFSET",
]

DEGENERATE_TOL = 1e-10
NEAR_DEGENERATE_GAP = 1e-6


@dataclass(frozen=True)
class EigenPair:
    xi_mag: float
    lambda3: complex
    lambda4: complex
    regime: str  # "real" | "degenerate" | "complex"


def eigenvalues(xi_mag: float) -> EigenPair:
    xi_mag = float(xi_mag)
    if not np.isfinite(xi_mag) or xi_mag < 0:
        raise ValueError(f"frequency magnitude must be finite and >= 0, got {xi_mag}")
    xi2 = xi_mag * xi_mag
    disc = 1.0 - 4.0 * xi2
    if abs(disc) < DEGENERATE_TOL:
        regime = "degenerate"
    elif disc > 0:
        regime = "real"
    else:
        regime = "complex"
    if disc >= 0:
        s = np.sqrt(disc)
        lam3 = -2.0 * xi2 / (1.0 + s)
        lam4 = -1.0 - lam3
        return EigenPair(xi_mag, complex(lam3), complex(lam4), regime)
    omega = 0.5 * np.sqrt(-disc)
    return EigenPair(xi_mag, complex(-0.5, omega), complex(-0.5, -omega), regime)


def _sinhc(x):
    x = np.asarray(x, dtype=float)
    safe = np.where(x == 0.0, 1.0, x)
    return np.where(x == 0.0, 1.0, np.sinh(safe) / safe)


def branch_functions(t: float, xi2) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(psi, phi, chi)`` at squared angular frequencies ``xi2``.

    With ``l3, l4`` the roots and ``E_i = exp(l_i t)``::

        phi = (E3 - E4) / (l3 - l4)
        psi = (l3 E4 - l4 E3) / (l3 - l4)
        chi = (l3 E3 - l4 E4) / (l3 - l4)
    """
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    xi2 = np.asarray(xi2, dtype=float)
    disc = 1.0 - 4.0 * xi2
    gap = np.sqrt(np.abs(disc))  # |l3 - l4|
    direct_real = (disc > 0) & (gap >= NEAR_DEGENERATE_GAP)
    direct_cplx = (disc < 0) & (gap >= NEAR_DEGENERATE_GAP)
    near = ~(direct_real | direct_cplx)

    psi = np.empty_like(xi2)
    phi = np.empty_like(xi2)
    chi = np.empty_like(xi2)

    if direct_real.any():
        s = gap[direct_real]
        l3 = -2.0 * xi2[direct_real] / (1.0 + s)
        l4 = -1.0 - l3
        e3 = np.exp(l3 * t)
        e4 = np.exp(l4 * t)
        phi[direct_real] = (e3 - e4) / s
        psi[direct_real] = (l3 * e4 - l4 * e3) / s
        chi[direct_real] = (l3 * e3 - l4 * e4) / s

    damp = np.exp(-0.5 * t)
    if direct_cplx.any():
        w = 0.5 * gap[direct_cplx]
        c = np.cos(w * t)
        sw = np.sin(w * t) / w
        phi[direct_cplx] = damp * sw
        psi[direct_cplx] = damp * (c + 0.5 * sw)
        chi[direct_cplx] = damp * (c - 0.5 * sw)

    if near.any():
        # symmetric form around the double root -1/2; exact limit at gap = 0
        dt_ = 0.5 * gap[near] * t
        sign = np.where(disc[near] >= 0, 1.0, -1.0)
        sinc_term = np.where(sign > 0, _sinhc(dt_), np.sinc(dt_ / np.pi))
        even = np.where(sign > 0, np.cosh(dt_), np.cos(dt_))
        phi[near] = damp * t * sinc_term
        psi[near] = damp * (even + 0.5 * t * sinc_term)
        chi[near] = damp * (even - 0.5 * t * sinc_term)
    return psi, phi, chi


def divided_difference(t: float, pair: EigenPair) -> float:
    """``(exp(l3 t) - exp(l4 t)) / (l3 - l4)``, real for every branch."""
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    _, phi, _ = branch_functions(t, np.array([pair.xi_mag**2]))
    return float(phi[0])


def symbol_matrix(t: float, xi) -> np.ndarray:
    """Dense ``(1+d) x (1+d)`` Green symbol at one wavevector ``xi``."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    d = xi.size
    xi2 = float(xi @ xi)
    psi, phi, chi = (float(v[0]) for v in branch_functions(t, np.array([xi2])))
    et = np.exp(-t)
    G = np.zeros((1 + d, 1 + d), dtype=complex)
    G[0, 0] = psi
    G[0, 1:] = -1j * xi * phi
    G[1:, 0] = -1j * xi * phi
    G[1:, 1:] = et * np.eye(d)
    if xi2 > 0:
        G[1:, 1:] += (chi - et) * np.outer(xi, xi) / xi2
    return G


def generator_matrix(xi) -> np.ndarray:
    """The symbol ``L(xi)`` itself, used by the matrix-exponential oracle."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    d = xi.size
    M = np.zeros((1 + d, 1 + d), dtype=complex)
    M[0, 1:] = 1j * xi
    M[1:, 0] = 1j * xi
    M[1:, 1:] = np.eye(d)
    return M


@dataclass(frozen=True)
class GreenSymbol:
    """Green symbol on a wavevector lattice, stored as scalar coefficient arrays.

    ``g11 = psi``, ``g12 = -i xi^T phi``, ``g21 = -i xi phi`` and
    ``g22 = alpha I + beta xi xi^T / |xi|^2`` with ``alpha = exp(-t)`` and
    ``beta = chi - exp(-t)`` (zero at ``xi = 0``).
    """

    t: float
    xi: tuple[np.ndarray, ...]
    g11: np.ndarray
    phi: np.ndarray
    alpha: float
    beta: np.ndarray
    grid: Grid | None = None

    def __post_init__(self):
        xi2 = sum(x * x for x in self.xi)
        object.__setattr__(self, "_beta_over_xi2",
                           np.where(xi2 > 0, self.beta / np.where(xi2 > 0, xi2, 1.0), 0.0))

    @property
    def d(self) -> int:
        return len(self.xi)

    def g12(self) -> np.ndarray:
        return np.stack([-1j * x * self.phi for x in self.xi])

    def g21(self) -> np.ndarray:
        return self.g12()

    def g22(self) -> np.ndarray:
        xi2 = sum(x * x for x in self.xi)
        inv = np.where(xi2 > 0, 1.0 / np.where(xi2 > 0, xi2, 1.0), 0.0)
        d = self.d
        out = np.empty((d, d) + np.shape(self.g11))
        for i in range(d):
            for j in range(d):
                out[i, j] = self.beta * self.xi[i] * self.xi[j] * inv + (self.alpha if i == j else 0.0)
        return out

    def matrix_at(self, index) -> np.ndarray:
        xi = np.array([np.broadcast_to(x, np.shape(self.g11))[index] for x in self.xi])
        d = self.d
        G = np.zeros((1 + d, 1 + d), dtype=complex)
        G[0, 0] = self.g11[index]
        G[0, 1:] = -1j * xi * self.phi[index]
        G[1:, 0] = G[0, 1:]
        G[1:, 1:] = self.alpha * np.eye(d)
        xi2 = xi @ xi
        if xi2 > 0:
            G[1:, 1:] += self.beta[index] * np.outer(xi, xi) / xi2
        return G

    def apply(self, a_hat: np.ndarray, u_hat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Blockwise multiplication of ``(a_hat, u_hat)``; any matching layout."""
        xi = self.xi
        div = sum(x * u_hat[j] for j, x in enumerate(xi))
        proj = self._beta_over_xi2 * div
        a_new = self.g11 * a_hat - 1j * self.phi * div
        cross = -1j * self.phi * a_hat
        u_new = np.stack([cross * x + self.alpha * u_hat[j] + proj * x for j, x in enumerate(xi)])
        return a_new, u_new


def symbol_on(t: float, xi: list[np.ndarray], grid: Grid | None = None) -> GreenSymbol:
    xi = tuple(xi)
    xi2 = np.zeros(np.broadcast_shapes(*(np.shape(x) for x in xi)))
    for x in xi:
        xi2 = xi2 + x * x
    psi, phi, chi = branch_functions(t, xi2)
    et = float(np.exp(-t))
    beta = np.where(xi2 > 0, chi - et, 0.0)
    return GreenSymbol(float(t), xi, psi, phi, et, beta, grid)


def assemble_symbol(t: float, grid: Grid, half: bool = False) -> GreenSymbol:
    """Green symbol on the grid lattice.

    The wavevector has its Nyquist components zeroed, so this is the exact
    propagator of the discrete first-derivative operators used by the
    time integrators.
    """
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    return symbol_on(t, grid.wavevector(half=half, odd=True), grid)


def apply_semigroup(t: float, U0: SpectralField, symbol: GreenSymbol | None = None) -> SpectralField:
    """Evolve spectral ``(a, u)`` (``1+d`` components) by the linear flow."""
    g = U0.grid
    if U0.components != 1 + g.d:
        raise ValueError(f"expected {1 + g.d} components (a, u), got {U0.components}")
    if symbol is None:
        symbol = assemble_symbol(t, g)
    elif symbol.grid is not None and symbol.grid != g:
        raise ValueError(f"symbol grid {symbol.grid} does not match field grid {g}")
    a, u = symbol.apply(U0.coeffs[0], U0.coeffs[1:])
    return SpectralField(g, np.concatenate([a[None], u]))


# (k + offset)/2 is the expected algebraic decay exponent of each block
EXPECTED_SLOPE_OFFSET = {"11": 0, "12": 1, "21": 1, "22": 2}


@dataclass
class MultiplierFit:
    block: str
    k: int
    times: np.ndarray
    sups: np.ndarray
    slope: float
    stderr: float
    expected: float
    identity_part: np.ndarray | None = None  # exp(-t) part of block 22

    @property
    def deviation(self) -> float:
        return abs(self.slope - self.expected)

    def to_dict(self, tol: float = 0.05) -> dict:
        out = {
            "block": self.block,
            "k": self.k,
            "times": self.times.tolist(),
            "sup": self.sups.tolist(),
            "slope": self.slope,
            "slope_stderr": self.stderr,
            "expected_slope": self.expected,
            "passed": bool(self.deviation <= tol),
        }
        if self.identity_part is not None:
            out["identity_part_exponential"] = self.identity_part.tolist()
        return out


def verify_multiplier_bound(block: str, k: int, cutoff: CutoffProfile, times,
                            n_xi: int = 20001) -> MultiplierFit:
    """Fit the algebraic decay of the low-frequency sup of one symbol block.

    ``S(t) = max_{|xi| <= r0} |xi|^k |entry(t, xi)|`` over a dense uniform
    sample; the slope of ``log S`` against ``log(1+t)`` is returned together
    with the table.  Blocks 12 and 21 share the entry magnitude
    ``|xi| |phi|``; block 22 uses the tensor coefficient ``|chi - exp(-t)|``.
    """
    block = str(block)
    if block not in EXPECTED_SLOPE_OFFSET:
        raise ValueError(f"block must be one of 11, 12, 21, 22, got {block!r}")
    if not 0 <= k <= 3:
        raise ValueError(f"derivative order must be in 0..3, got {k}")
    times = np.asarray(times, dtype=float)
    if times.size < 8:
        raise ValueError(f"need at least 8 time samples, got {times.size}")
    if times.min() < 1:
        raise ValueError("time samples must lie in [1, inf)")
    xi = np.linspace(0.0, cutoff.r0, n_xi)
    weight = xi**k
    sups = np.empty(times.size)
    for i, t in enumerate(times):
        psi, phi, chi = branch_functions(t, xi * xi)
        if block == "11":
            entry = np.abs(psi)
        elif block == "22":
            entry = np.abs(chi - np.exp(-t))
        else:
            entry = xi * np.abs(phi)
        sups[i] = np.max(weight * entry)
    slope, stderr = power_law_fit(times, sups)
    expected = -(k + EXPECTED_SLOPE_OFFSET[block]) / 2.0
    ident = np.exp(-times) if block == "22" else None
    return MultiplierFit(block, k, times, sups, slope, stderr, expected, ident)
