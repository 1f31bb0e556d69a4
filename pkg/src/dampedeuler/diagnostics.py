"""Per-sample norms, running criterion integrals, and decay-rate fitting."""
from __future__ import annotations

import csv
import re
from dataclasses import asdict, dataclass, fields

import numpy as np
import scipy.fft as sfft

from ._fit import power_law_fit
from .dynamics import State
from .spectral import (
    CutoffProfile,
    RealField,
    SpectralField,
    fft_workers,
    sobolev_norm,
    split,
    transform_forward,
)

__all__ = [
    "CSV_HEADER",
    "DiagnosticsRecord",
    "Recorder",
    "DecayFit",
    "EnvelopeCheck",
    "BoundednessCheck",
    "record",
    "fit_exponent",
    "expected_slope",
    "density_envelope_check",
    "boundedness_check",
    "norm_floor",
    "weighted_norm_aggregate",
    "write_csv",
    "read_csv",
    "BOX_VALIDITY_LIMIT",
]

CSV_HEADER = (
    "t,d0_a,d1_a,d2_a,d3_a,d0_u,d1_u,d2_u,d3_u,d0_rho,d1_rho,d2_rho,d3_rho,"
    "d0_a_low,d1_a_low,d2_a_low,d3_a_low,d0_u_low,d1_u_low,d2_u_low,d3_u_low,"
    "d0_a_high,d1_a_high,d2_a_high,d3_a_high,d0_u_high,d1_u_high,d2_u_high,d3_u_high,"
    "linf_grad_a,linf_grad_u,linf_div_u,criterion_integral,divu_integral,mass,"
    "momentum_1,momentum_2,momentum_3,rho_min,rho_max"
)
COLUMNS = tuple(CSV_HEADER.split(","))

BOX_VALIDITY_LIMIT = 0.2


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    d0_a: float
    d1_a: float
    d2_a: float
    d3_a: float
    d0_u: float
    d1_u: float
    d2_u: float
    d3_u: float
    d0_rho: float
    d1_rho: float
    d2_rho: float
    d3_rho: float
    d0_a_low: float
    d1_a_low: float
    d2_a_low: float
    d3_a_low: float
    d0_u_low: float
    d1_u_low: float
    d2_u_low: float
    d3_u_low: float
    d0_a_high: float
    d1_a_high: float
    d2_a_high: float
    d3_a_high: float
    d0_u_high: float
    d1_u_high: float
    d2_u_high: float
    d3_u_high: float
    linf_grad_a: float
    linf_grad_u: float
    linf_div_u: float
    criterion_integral: float
    divu_integral: float
    mass: float
    momentum_1: float
    momentum_2: float
    momentum_3: float
    rho_min: float
    rho_max: float

    def norm(self, quantity: str, k: int) -> float:
        return getattr(self, f"d{k}_{quantity}")

    def h3_norm(self) -> float:
        """``||(a, u)||_{H^3}`` assembled from the stored seminorms."""
        return float(np.sqrt(sum(self.norm("a", k) ** 2 + self.norm("u", k) ** 2 for k in range(4))))

    @property
    def momentum(self) -> np.ndarray:
        return np.array([self.momentum_1, self.momentum_2, self.momentum_3])

    def row(self) -> list[str]:
        return [repr(float(getattr(self, c))) for c in COLUMNS]


assert tuple(f.name for f in fields(DiagnosticsRecord)) == COLUMNS


def _physical_partials(F: SpectralField) -> np.ndarray:
    """Spectral first partials, shape ``(d, c, N, ..., N)``."""
    g = F.grid
    unscaled = F.coeffs / g.cell_volume
    out = np.empty((g.d,) + F.coeffs.shape)
    for j, xi in enumerate(g.wavevector(odd=True)):
        out[j] = sfft.ifftn(1j * xi * unscaled, axes=g.axes, workers=fft_workers()).real
    return out


def _pairwise_integral(x: np.ndarray, cell: float) -> float:
    return float(np.sum(np.ascontiguousarray(x).ravel()) * cell)


def record(s: State, cutoff: CutoffProfile, prev: DiagnosticsRecord | None = None) -> DiagnosticsRecord:
    if not s.is_finite():
        raise ValueError(f"cannot record a non-finite state at t={s.t}")
    g = s.grid
    rho = s.rho
    A = transform_forward(RealField(g, s.a))
    U = transform_forward(RealField(g, s.u))
    R = transform_forward(RealField(g, rho - s.rho_star))
    A_low, A_high = split(A, cutoff)
    U_low, U_high = split(U, cutoff)

    vals: dict[str, float] = {"t": float(s.t)}
    for name, full, low, high in (("a", A, A_low, A_high), ("u", U, U_low, U_high)):
        for k in range(4):
            vals[f"d{k}_{name}"] = sobolev_norm(full, k)
            vals[f"d{k}_{name}_low"] = sobolev_norm(low, k)
            vals[f"d{k}_{name}_high"] = sobolev_norm(high, k)
    for k in range(4):
        vals[f"d{k}_rho"] = sobolev_norm(R, k)

    grad_a = _physical_partials(A)[:, 0]
    grad_u = _physical_partials(U)  # [j, i] = d_j u_i
    vals["linf_grad_a"] = float(np.sqrt(np.max(np.sum(grad_a**2, axis=0))))
    vals["linf_grad_u"] = float(np.sqrt(np.max(np.sum(grad_u**2, axis=(0, 1)))))
    div = sum(grad_u[j, j] for j in range(g.d))
    vals["linf_div_u"] = float(np.max(np.abs(div)))

    crit = vals["linf_grad_a"] + vals["linf_grad_u"]
    if prev is None:
        vals["criterion_integral"] = 0.0
        vals["divu_integral"] = 0.0
    else:
        dt = vals["t"] - prev.t
        vals["criterion_integral"] = prev.criterion_integral + 0.5 * dt * (
            crit + prev.linf_grad_a + prev.linf_grad_u)
        vals["divu_integral"] = prev.divu_integral + 0.5 * dt * (vals["linf_div_u"] + prev.linf_div_u)

    cell = g.cell_volume
    vals["mass"] = _pairwise_integral(rho - s.rho_star, cell)
    for i in range(3):
        vals[f"momentum_{i + 1}"] = _pairwise_integral(rho * s.u[i], cell) if i < g.d else 0.0
    vals["rho_min"] = float(rho.min())
    vals["rho_max"] = float(rho.max())
    return DiagnosticsRecord(**vals)


class Recorder:
    """Sink for :func:`dynamics.run` that accumulates records and run metadata."""

    def __init__(self, cutoff: CutoffProfile):
        self.cutoff = cutoff
        self.records: list[DiagnosticsRecord] = []
        self.metadata: dict = {}

    def __call__(self, s: State) -> DiagnosticsRecord:
        prev = self.records[-1] if self.records else None
        rec = record(s, self.cutoff, prev)
        if prev is None:
            self.metadata.update(
                N0=rec.h3_norm(),
                rho0_min=rec.rho_min,
                rho0_max=rec.rho_max,
                mass0=rec.mass,
                momentum0=rec.momentum.tolist(),
            )
        self.records.append(rec)
        return rec

    @property
    def last(self) -> DiagnosticsRecord | None:
        return self.records[-1] if self.records else None

    def series(self, column: str) -> tuple[np.ndarray, np.ndarray]:
        t = np.array([r.t for r in self.records])
        return t, np.array([getattr(r, column) for r in self.records])


# -- decay fits ---------------------------------------------------------------

_QUANTITY = re.compile(r"^d([0-3])_(a|u|rho)(?:_(low|high))?$")


def expected_slope(name: str) -> float:
    """Decay exponent of a column: ``-k/2`` for a and rho, ``-(k+1)/2`` for u."""
    m = _QUANTITY.match(name)
    if m is None:
        raise ValueError(f"no decay law is associated with column {name!r}")
    k = int(m.group(1))
    return -(k + 1) / 2.0 if m.group(2) == "u" else -k / 2.0


def norm_floor(initial: float) -> float:
    return 1e3 * np.finfo(float).eps * initial


@dataclass
class DecayFit:
    quantity: str
    window: tuple[float, float]
    slope: float
    stderr: float
    expected: float | None
    tolerance: float | None
    samples: int

    @property
    def margin(self) -> float | None:
        if self.expected is None or self.tolerance is None:
            return None
        return self.tolerance - abs(self.slope - self.expected)

    @property
    def passed(self) -> bool | None:
        m = self.margin
        return None if m is None else bool(m >= 0)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["window"] = list(self.window)
        out["margin"] = self.margin
        out["passed"] = self.passed
        return out


def check_window(window, box_length: float | None) -> tuple[float, float]:
    lo, hi = float(window[0]), float(window[1])
    if not hi > lo:
        raise ValueError(f"fit window [{lo}, {hi}] is empty")
    if lo < 1.0:
        raise ValueError(f"fit window [{lo}, {hi}] starts before t = 1 (transient excluded)")
    if box_length is not None:
        val = (2 * np.pi / box_length) ** 2 * hi
        if val > BOX_VALIDITY_LIMIT:
            raise ValueError(
                f"fit window [{lo}, {hi}] violates box validity: (2*pi/L)^2 * t_hi = {val:.4g} "
                f"> {BOX_VALIDITY_LIMIT} for L = {box_length}"
            )
    return lo, hi


def fit_exponent(t, values, window, *, quantity: str = "", expected: float | None = None,
                 tolerance: float | None = None, box_length: float | None = None,
                 floor: float | None = None) -> DecayFit:
    """Least-squares slope of ``log(value)`` against ``log(1+t)`` in a window.

    Samples after the first one below ``floor`` are dropped (roundoff
    floor).  ``expected`` defaults to the decay law of ``quantity`` when that
    names a norm column.
    """
    lo, hi = check_window(window, box_length)
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    sel = (t >= lo) & (t <= hi)
    t, v = t[sel], v[sel]
    if np.any(v <= 0):
        raise ValueError(f"non-positive values of {quantity or 'series'} inside fit window")
    if floor is not None:
        below = np.flatnonzero(v < floor)
        if below.size:
            t, v = t[:below[0]], v[:below[0]]
    if t.size < 8:
        raise ValueError(f"need at least 8 samples in window [{lo}, {hi}], got {t.size}")
    slope, stderr = power_law_fit(t, v)
    if expected is None and quantity and _QUANTITY.match(quantity):
        expected = expected_slope(quantity)
    return DecayFit(quantity, (lo, hi), slope, stderr, expected, tolerance, int(t.size))


# -- checks -------------------------------------------------------------------

@dataclass
class EnvelopeCheck:
    passed: bool
    lower_bound: float
    upper_bound: float
    lower_margin: float
    upper_margin: float
    divu_integral: float


def density_envelope_check(rec: DiagnosticsRecord, rho0_min: float, rho0_max: float,
                           rtol: float = 1e-12) -> EnvelopeCheck:
    """``exp(-I) rho0_min <= rho <= exp(I) rho0_max`` with ``I`` the div-u integral."""
    I = rec.divu_integral
    lower = np.exp(-I) * rho0_min
    upper = np.exp(I) * rho0_max
    lm = rec.rho_min - lower
    um = upper - rec.rho_max
    ok = lm >= -rtol * rho0_min and um >= -rtol * rho0_max
    return EnvelopeCheck(bool(ok), float(lower), float(upper), float(lm), float(um), float(I))


@dataclass
class BoundednessCheck:
    passed: bool
    sup: float
    N0: float
    ratio: float
    factor: float
    argmax: int


def boundedness_check(h3_norms, N0: float, factor: float = 1.1) -> BoundednessCheck:
    h3 = np.asarray(h3_norms, dtype=float)
    i = int(np.argmax(h3))
    sup = float(h3[i])
    if N0 == 0:
        return BoundednessCheck(sup == 0, sup, 0.0, 0.0 if sup == 0 else np.inf, factor, i)
    ratio = sup / N0
    return BoundednessCheck(bool(ratio <= factor), sup, float(N0), float(ratio), factor, i)


def weighted_norm_aggregate(records) -> float:
    """``sup_t`` of time-weighted seminorms at their expected decay rates.

    A raw inspection quantity; no threshold is attached to it.
    """
    best = 0.0
    for r in records:
        w = 1.0 + r.t
        val = sum(w ** (k / 2) * r.norm("a", k) for k in range(1, 4))
        val += sum(w ** ((k + 1) / 2) * r.norm("u", k) for k in range(4))
        best = max(best, val)
    return float(best)


# -- CSV I/O ------------------------------------------------------------------

def write_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        w = csv.writer(fh, lineterminator="\n")
        for r in records:
            w.writerow(r.row())


def read_csv(path, required=None) -> dict[str, np.ndarray]:
    """Load a diagnostics CSV as column arrays; names missing columns explicitly."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty CSV") from None
        rows = [list(map(float, row)) for row in reader if row]
    required = COLUMNS if required is None else tuple(required)
    missing = [c for c in required if c not in header]
    if missing:
        raise ValueError(f"{path}: missing columns: {', '.join(missing)}")
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def records_from_columns(cols: dict[str, np.ndarray]) -> list[DiagnosticsRecord]:
    n = len(cols["t"])
    return [DiagnosticsRecord(**{c: float(cols[c][i]) for c in COLUMNS}) for i in range(n)]
