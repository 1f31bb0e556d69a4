"""Time integration of the log-density / velocity system

    a_t + u . grad a + div u = 0
    u_t + u . grad u + grad a + u = 0,      a = ln(rho / rho_star).

Integrators keep ``(a, u)`` as real-to-complex spectra; products are formed in
physical space and optionally truncated by the two-thirds rule.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.fft as sfft

from .greens import GreenSymbol, assemble_symbol
from .spectral import Grid, fft_workers

__all__ = [
    "State",
    "IntegratorConfig",
    "RunResult",
    "BlowUpError",
    "SpectralSystem",
    "nonlinear_rhs",
    "step_strang",
    "step_rk4",
    "step_exponential_euler",
    "default_dt",
    "run",
    "SCHEMES",
]

log = logging.getLogger(__name__)

BLOWUP_THRESHOLD = 1e6
# beyond |a| = 300 the squared density norms are no longer representable in float64
LOG_DENSITY_LIMIT = 300.0
SCHEMES = ("strang-exponential", "rk4", "exponential-euler")


class BlowUpError(RuntimeError):
    def __init__(self, t: float, reason: str):
        super().__init__(f"blow-up at t={t:.6g}: {reason}")
        self.t = t
        self.reason = reason


@dataclass(frozen=True)
class State:
    grid: Grid
    a: np.ndarray
    u: np.ndarray
    t: float = 0.0
    rho_star: float = 1.0

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        u = np.asarray(self.u, dtype=float)
        g = self.grid
        if a.shape != g.shape:
            raise ValueError(f"a has shape {a.shape}, grid expects {g.shape}")
        if g.d == 1 and u.shape == g.shape:
            u = u[None]
        if u.shape != (g.d,) + g.shape:
            raise ValueError(f"u has shape {u.shape}, grid expects {(g.d,) + g.shape}")
        if not self.rho_star > 0:
            raise ValueError(f"rho_star must be positive, got {self.rho_star}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "u", u)

    @property
    def rho(self) -> np.ndarray:
        return self.rho_star * np.exp(self.a)

    @classmethod
    def zeros(cls, grid: Grid, rho_star: float = 1.0) -> "State":
        return cls(grid, np.zeros(grid.shape), np.zeros((grid.d,) + grid.shape), 0.0, rho_star)

    @classmethod
    def from_density(cls, grid: Grid, rho: np.ndarray, u: np.ndarray,
                     rho_star: float = 1.0, t: float = 0.0) -> "State":
        if np.any(rho <= 0):
            raise ValueError("density must be positive")
        return cls(grid, np.log(rho) - math.log(rho_star), u, t, rho_star)

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.a).all() and np.isfinite(self.u).all())


@dataclass
class IntegratorConfig:
    scheme: str = "strang-exponential"
    dt: float | None = None  # None: default_dt of the initial state
    t_end: float = 1.0
    dealias: bool = True
    output_every: int = 1
    linear_only: bool = False

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_end < 0:
            raise ValueError(f"t_end must be >= 0, got {self.t_end}")
        if self.output_every < 1:
            raise ValueError(f"output_every must be >= 1, got {self.output_every}")


def default_dt(s: State) -> float:
    """Advective plus acoustic speed heuristic (the sound speed is 1)."""
    return 0.5 * s.grid.h / (1.0 + float(np.max(np.abs(s.u), initial=0.0)) + 1.0)


def check_cfl(s: State, dt: float, scheme: str) -> None:
    if scheme != "rk4":
        return
    limit = 0.5 * s.grid.h / (float(np.max(np.abs(s.u), initial=0.0)) + 1.0)
    if dt > limit:
        warnings.warn(f"rk4 step dt={dt:.3g} exceeds advisory CFL bound {limit:.3g}", stacklevel=3)


class SpectralSystem:
    """Right-hand sides and propagators on the rfft layout of one grid."""

    def __init__(self, grid: Grid, dealias: bool = True):
        self.grid = grid
        self.xi = grid.wavevector(half=True, odd=True)
        self.ixi = [1j * x for x in self.xi]
        self.mask = grid.dealias_mask(half=True) if dealias else None
        d = grid.d
        self._n_curl = {1: 0, 2: 1, 3: 3}[d]
        self._buffer = np.empty((2 * d + self._n_curl,) + grid.half_shape, dtype=complex)
        self.axes = grid.axes
        self.workers = fft_workers()
        self._symbols: dict[float, GreenSymbol] = {}

    def forward(self, x: np.ndarray) -> np.ndarray:
        return sfft.rfftn(x, axes=self.axes, workers=self.workers)

    def inverse(self, xh: np.ndarray) -> np.ndarray:
        return sfft.irfftn(xh, s=self.grid.shape, axes=self.axes, workers=self.workers)

    def to_spectral(self, s: State) -> tuple[np.ndarray, np.ndarray]:
        return self.forward(s.a), self.forward(s.u)

    def to_state(self, ah: np.ndarray, uh: np.ndarray, t: float, rho_star: float) -> State:
        return State(self.grid, self.inverse(ah), self.inverse(uh), t, rho_star)

    def nonlinear(self, ah: np.ndarray, uh: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Spectra of ``-u . grad a`` and ``-u . grad u``.

        The velocity term uses the rotational form
        ``u . grad u = grad(|u|^2 / 2) - u x curl u``, which needs 2d + n_curl
        inverse transforms instead of d + d(1 + d).
        """
        d = self.grid.d
        nw = self._n_curl
        spec = self._buffer
        spec[:d] = uh
        for j, x in enumerate(self.ixi):
            np.multiply(x, ah, out=spec[d + j])
        ix = self.ixi
        if d == 2:
            spec[2 * d] = ix[0] * uh[1] - ix[1] * uh[0]
        elif d == 3:
            for c, (p, q) in enumerate(((1, 2), (2, 0), (0, 1))):
                spec[2 * d + c] = ix[p] * uh[q] - ix[q] * uh[p]
        phys = self.inverse(spec)
        u, grad_a, w = phys[:d], phys[d:2 * d], phys[2 * d:2 * d + nw]
        prod = np.empty((2 + (d if nw else 0),) + self.grid.shape)
        np.einsum("i...,i...->...", u, grad_a, out=prod[0])
        np.einsum("i...,i...->...", u, u, out=prod[1])
        prod[1] *= 0.5
        if d == 2:
            # u x w for the scalar vorticity w: (u2 w, -u1 w)
            np.multiply(u[1], w[0], out=prod[2])
            np.multiply(u[0], w[0], out=prod[3])
            np.negative(prod[3], out=prod[3])
        elif d == 3:
            for c, (p, q) in enumerate(((1, 2), (2, 0), (0, 1))):
                np.multiply(u[p], w[q], out=prod[2 + c])
                prod[2 + c] -= u[q] * w[p]
        out = self.forward(prod)
        na = -out[0]
        nu = np.stack([-x * out[1] for x in self.ixi])
        if nw:
            nu += out[2:]
        if self.mask is not None:
            na *= self.mask
            nu *= self.mask
        return na, nu

    def linear(self, ah: np.ndarray, uh: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Spectra of ``-div u`` and ``-grad a - u``."""
        div = sum(x * uh[j] for j, x in enumerate(self.xi))
        la = -1j * div
        lu = np.stack([-1j * x * ah for x in self.xi]) - uh
        return la, lu

    def symbol(self, t: float) -> GreenSymbol:
        sym = self._symbols.get(t)
        if sym is None:
            sym = assemble_symbol(t, self.grid, half=True)
            self._symbols[t] = sym
        return sym

    def propagate(self, t: float, ah, uh):
        return self.symbol(t).apply(ah, uh)

    def amplitude_bound(self, ah: np.ndarray, uh: np.ndarray) -> float:
        """Cheap upper bound of ``max(|a|, |u|)`` from the rfft coefficients."""
        n = self.grid.N**self.grid.d
        return 2.0 * max(np.abs(ah).sum(), np.abs(uh).sum(axis=tuple(range(1, uh.ndim))).max()) / n

    # -- single steps on spectra -----------------------------------------

    def rk4(self, ah, uh, dt, linear_only=False):
        def rhs(a_, u_):
            la, lu = self.linear(a_, u_)
            if linear_only:
                return la, lu
            na, nu = self.nonlinear(a_, u_)
            return la + na, lu + nu

        k1 = rhs(ah, uh)
        k2 = rhs(ah + 0.5 * dt * k1[0], uh + 0.5 * dt * k1[1])
        k3 = rhs(ah + 0.5 * dt * k2[0], uh + 0.5 * dt * k2[1])
        k4 = rhs(ah + dt * k3[0], uh + dt * k3[1])
        return (ah + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
                uh + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]))

    def nonlinear_rk4(self, ah, uh, dt):
        n = self.nonlinear
        k1 = n(ah, uh)
        k2 = n(ah + 0.5 * dt * k1[0], uh + 0.5 * dt * k1[1])
        k3 = n(ah + 0.5 * dt * k2[0], uh + 0.5 * dt * k2[1])
        k4 = n(ah + dt * k3[0], uh + dt * k3[1])
        return (ah + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
                uh + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]))

    def strang(self, ah, uh, dt, linear_only=False):
        ah, uh = self.propagate(0.5 * dt, ah, uh)
        if not linear_only:
            ah, uh = self.nonlinear_rk4(ah, uh, dt)
        return self.propagate(0.5 * dt, ah, uh)

    def exponential_euler(self, ah, uh, dt, linear_only=False):
        # integrating-factor (Lawson) Euler: U+ = G(dt) (U + dt N(U))
        if not linear_only:
            na, nu = self.nonlinear(ah, uh)
            ah, uh = ah + dt * na, uh + dt * nu
        return self.propagate(dt, ah, uh)

    def step(self, scheme: str, ah, uh, dt, linear_only=False):
        if scheme == "strang-exponential":
            return self.strang(ah, uh, dt, linear_only)
        if scheme == "rk4":
            return self.rk4(ah, uh, dt, linear_only)
        if scheme == "exponential-euler":
            return self.exponential_euler(ah, uh, dt, linear_only)
        raise ValueError(f"unknown scheme {scheme!r}")


def nonlinear_rhs(s: State, dealias: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Physical ``(f1, f2) = (-u . grad a, -u . grad u)``."""
    sys_ = SpectralSystem(s.grid, dealias)
    ah, uh = sys_.to_spectral(s)
    f1h, f2h = sys_.nonlinear(ah, uh)
    return sys_.inverse(f1h), sys_.inverse(f2h)


def _checked(sys_: SpectralSystem, ah, uh, t: float):
    if not (np.isfinite(ah).all() and np.isfinite(uh).all()):
        raise BlowUpError(t, "non-finite values")
    if sys_.amplitude_bound(ah, uh) > LOG_DENSITY_LIMIT:
        a = sys_.inverse(ah)
        u = sys_.inverse(uh)
        peak = max(np.abs(a).max(), np.abs(u).max())
        if peak > BLOWUP_THRESHOLD:
            raise BlowUpError(t, f"max |(a, u)| = {peak:.3e} exceeds {BLOWUP_THRESHOLD:.0e}")
        if np.abs(a).max() > LOG_DENSITY_LIMIT:
            raise BlowUpError(t, f"max |a| = {np.abs(a).max():.3e}: density norms leave the float64 range")
    return ah, uh


def _single_step(scheme: str, s: State, dt: float, dealias: bool, linear_only: bool) -> State:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    check_cfl(s, dt, scheme)
    sys_ = SpectralSystem(s.grid, dealias)
    ah, uh = sys_.to_spectral(s)
    ah, uh = _checked(sys_, *sys_.step(scheme, ah, uh, dt, linear_only), s.t + dt)
    return sys_.to_state(ah, uh, s.t + dt, s.rho_star)


def step_strang(s: State, dt: float, dealias: bool = True, linear_only: bool = False) -> State:
    """Half linear flow, one RK4 step of the advection subsystem, half linear flow."""
    return _single_step("strang-exponential", s, dt, dealias, linear_only)


def step_rk4(s: State, dt: float, dealias: bool = True, linear_only: bool = False) -> State:
    return _single_step("rk4", s, dt, dealias, linear_only)


def step_exponential_euler(s: State, dt: float, dealias: bool = True,
                           linear_only: bool = False) -> State:
    return _single_step("exponential-euler", s, dt, dealias, linear_only)


@dataclass
class RunResult:
    state: State
    status: str  # "completed" | "blow-up" | "aborted"
    steps: int
    dt: float
    blowup_time: float | None = None
    message: str = ""
    last_record: object = None
    records: list = field(default_factory=list)

    @property
    def completed(self) -> bool:
        return self.status == "completed"


def run(s0: State, cfg: IntegratorConfig, sink: Callable[[State], object] | None = None) -> RunResult:
    """Advance ``s0`` to ``cfg.t_end``, calling ``sink`` on sampled states.

    ``sink`` is called at t=0, every ``output_every`` steps and at the final
    time; whatever it returns is collected in ``RunResult.records``.
    """
    dt = cfg.dt if cfg.dt is not None else default_dt(s0)
    check_cfl(s0, dt, cfg.scheme)
    sys_ = SpectralSystem(s0.grid, cfg.dealias)
    result = RunResult(s0, "completed", 0, dt)

    def emit(state: State):
        if sink is None:
            return
        rec = sink(state)
        result.records.append(rec)
        result.last_record = rec

    emit(s0)
    if cfg.t_end == 0:
        return result

    n_steps = max(1, math.ceil(cfg.t_end / dt - 1e-9))
    ah, uh = sys_.to_spectral(s0)
    t = s0.t
    step = 0
    try:
        for step in range(1, n_steps + 1):
            h = dt if step < n_steps else (s0.t + cfg.t_end) - t
            ah, uh = _checked(sys_, *sys_.step(cfg.scheme, ah, uh, h, cfg.linear_only), t + h)
            t = s0.t + cfg.t_end if step == n_steps else t + h
            if step % cfg.output_every == 0 or step == n_steps:
                emit(sys_.to_state(ah, uh, t, s0.rho_star))
    except BlowUpError as exc:
        log.warning("%s", exc)
        result.status = "blow-up"
        result.blowup_time = exc.t
        result.message = str(exc)
        result.steps = step - 1
        result.state = sys_.to_state(ah, uh, t, s0.rho_star)
        return result
    except KeyboardInterrupt:
        result.status = "aborted"
        result.message = "interrupted"
        result.steps = step - 1
        result.state = sys_.to_state(ah, uh, t, s0.rho_star)
        return result
    result.steps = n_steps
    result.state = sys_.to_state(ah, uh, t, s0.rho_star)
    return result
