"""Run configuration (JSON), initial-condition builders and state snapshots.

Units: lengths in the same unit as the box side ``grid.L``; times in units of
the damping time (the friction coefficient is 1); densities in the unit of
``rho_star``; velocities in units of the sound speed (1 for P = rho).
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import SCHEMES, IntegratorConfig, State
from .spectral import CutoffProfile, Grid

__all__ = [
    "ConfigError",
    "GridConfig",
    "CutoffConfig",
    "IntegratorSection",
    "OutputConfig",
    "ChecksConfig",
    "RunConfig",
    "parse_config",
    "load_config",
    "dump_config",
    "PRESETS",
    "make_remark1_ic",
    "make_gaussian_ic",
    "make_single_mode_ic",
    "build_initial_state",
    "save_snapshot",
    "load_snapshot",
]


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field path."""


@dataclass
class GridConfig:
    d: int = 3
    N: int = 64
    L: float = 200.0


@dataclass
class CutoffConfig:
    r0: float = 0.25
    R0: float = 0.45
    kind: str = "smooth"


@dataclass
class IntegratorSection:
    scheme: str = "strang-exponential"
    dt: float | None = None
    t_end: float = 1.0
    dealias: bool = True
    output_every: int = 1
    linear_only: bool = False


@dataclass
class OutputConfig:
    csv_path: str | None = None
    json_report_path: str | None = None


@dataclass
class ChecksConfig:
    boundedness_factor: float | None = 1.1
    criterion_threshold: float | None = 0.1
    density_envelope: bool = True
    fit_tolerance: float = 0.2


@dataclass
class RunConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    rho_star: float = 1.0
    cutoff: CutoffConfig = field(default_factory=CutoffConfig)
    integrator: IntegratorSection = field(default_factory=IntegratorSection)
    ic: dict = field(default_factory=lambda: {"type": "remark1", "epsilon": 1e-2})
    output: OutputConfig = field(default_factory=OutputConfig)
    fit_windows: dict[str, list[float]] = field(default_factory=dict)
    checks: ChecksConfig = field(default_factory=ChecksConfig)
    seed: int | None = None

    def make_grid(self) -> Grid:
        g = self.grid
        return Grid(g.d, g.N, g.L)

    def make_cutoff(self) -> CutoffProfile:
        c = self.cutoff
        return CutoffProfile(c.r0, c.R0, c.kind)

    def make_integrator(self) -> IntegratorConfig:
        return IntegratorConfig(**asdict(self.integrator))

    def to_dict(self) -> dict:
        return asdict(self)


# -- parsing ------------------------------------------------------------------

_IC_FIELDS = {
    "remark1": {"epsilon": float},
    "gaussian": {"amp_a": float, "amp_u": float, "width": float},
    "single_mode": {"kappa": list, "amp_a": float, "amp_u": float},
    "file": {"path": str},
}


def _number(value, path, kind=float, positive=False, allow_zero=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    if kind is int and (not float(value).is_integer()):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    value = kind(value)
    if not math.isfinite(value):
        raise ConfigError(f"{path}: must be finite")
    if positive and not (value > 0 or (allow_zero and value == 0)):
        raise ConfigError(f"{path}: must be {'non-negative' if allow_zero else 'positive'}, got {value}")
    return value


def _section(raw: dict, name: str, required: bool = False) -> dict:
    if name not in raw:
        if required:
            raise ConfigError(f"{name}: missing required section")
        return {}
    sec = raw[name]
    if not isinstance(sec, dict):
        raise ConfigError(f"{name}: expected an object")
    return sec


def _reject_unknown(sec: dict, allowed, path: str):
    extra = sorted(set(sec) - set(allowed))
    if extra:
        raise ConfigError(f"{path}.{extra[0]}: unknown field")


def parse_config(raw: dict) -> RunConfig:
    """Validate a decoded JSON document into a :class:`RunConfig`."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>: expected a JSON object")
    _reject_unknown(raw, RunConfig.__dataclass_fields__, "<root>")

    g = _section(raw, "grid", required=True)
    _reject_unknown(g, ("d", "N", "L"), "grid")
    for key in ("N", "L"):
        if key not in g:
            raise ConfigError(f"grid.{key}: missing required field")
    grid = GridConfig(
        d=_number(g.get("d", 3), "grid.d", int, positive=True),
        N=_number(g["N"], "grid.N", int, positive=True),
        L=_number(g["L"], "grid.L", float, positive=True),
    )
    try:
        Grid(grid.d, grid.N, grid.L)
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from None

    rho_star = _number(raw.get("rho_star", 1.0), "rho_star", positive=True)

    c = _section(raw, "cutoff")
    _reject_unknown(c, ("r0", "R0", "kind"), "cutoff")
    cutoff = CutoffConfig(
        r0=_number(c.get("r0", 0.25), "cutoff.r0", positive=True),
        R0=_number(c.get("R0", 0.45), "cutoff.R0", positive=True),
        kind=str(c.get("kind", "smooth")),
    )
    try:
        prof = CutoffProfile(cutoff.r0, cutoff.R0, cutoff.kind)
        prof.check_resolved(Grid(grid.d, grid.N, grid.L))
    except ValueError as exc:
        raise ConfigError(f"cutoff: {exc}") from None

    it = _section(raw, "integrator")
    _reject_unknown(it, IntegratorSection.__dataclass_fields__, "integrator")
    scheme = it.get("scheme", "strang-exponential")
    if scheme not in SCHEMES:
        raise ConfigError(f"integrator.scheme: unknown scheme {scheme!r}, expected one of {SCHEMES}")
    integ = IntegratorSection(
        scheme=scheme,
        dt=None if it.get("dt") is None else _number(it["dt"], "integrator.dt", positive=True),
        t_end=_number(it.get("t_end", 1.0), "integrator.t_end", positive=True, allow_zero=True),
        dealias=bool(it.get("dealias", True)),
        output_every=_number(it.get("output_every", 1), "integrator.output_every", int, positive=True),
        linear_only=bool(it.get("linear_only", False)),
    )

    ic = _section(raw, "ic")
    ic = dict(ic) if ic else {"type": "remark1", "epsilon": 1e-2}
    kind = ic.get("type")
    if kind not in _IC_FIELDS:
        raise ConfigError(f"ic.type: expected one of {sorted(_IC_FIELDS)}, got {kind!r}")
    _reject_unknown(ic, ("type",) + tuple(_IC_FIELDS[kind]), "ic")
    for key, typ in _IC_FIELDS[kind].items():
        if key not in ic:
            raise ConfigError(f"ic.{key}: missing required field for ic type {kind!r}")
        if typ is float:
            ic[key] = _number(ic[key], f"ic.{key}")
    if kind == "remark1" and not 0 < ic["epsilon"] < 1:
        raise ConfigError(f"ic.epsilon: must lie in (0, 1), got {ic['epsilon']}")
    if kind == "gaussian" and not ic["width"] > 0:
        raise ConfigError(f"ic.width: must be positive, got {ic['width']}")
    if kind == "single_mode":
        kv = ic["kappa"]
        if not (isinstance(kv, list) and len(kv) == grid.d and all(isinstance(v, int) for v in kv)):
            raise ConfigError(f"ic.kappa: expected {grid.d} integer lattice indices, got {kv!r}")

    o = _section(raw, "output")
    _reject_unknown(o, ("csv_path", "json_report_path"), "output")
    output = OutputConfig(o.get("csv_path"), o.get("json_report_path"))

    fw = raw.get("fit_windows", {}) or {}
    if not isinstance(fw, dict):
        raise ConfigError("fit_windows: expected an object mapping column -> [t_lo, t_hi]")
    windows = {}
    for name, win in fw.items():
        if not (isinstance(win, list) and len(win) == 2):
            raise ConfigError(f"fit_windows.{name}: expected [t_lo, t_hi]")
        windows[name] = [_number(win[0], f"fit_windows.{name}[0]"), _number(win[1], f"fit_windows.{name}[1]")]

    ch = _section(raw, "checks")
    _reject_unknown(ch, ChecksConfig.__dataclass_fields__, "checks")
    defaults = ChecksConfig()
    checks = ChecksConfig(
        boundedness_factor=None if ch.get("boundedness_factor", 0) is None
        else _number(ch.get("boundedness_factor", defaults.boundedness_factor),
                     "checks.boundedness_factor", positive=True),
        criterion_threshold=None if ch.get("criterion_threshold", 0) is None
        else _number(ch.get("criterion_threshold", defaults.criterion_threshold),
                     "checks.criterion_threshold", positive=True),
        density_envelope=bool(ch.get("density_envelope", True)),
        fit_tolerance=_number(ch.get("fit_tolerance", defaults.fit_tolerance),
                              "checks.fit_tolerance", positive=True),
    )

    seed = raw.get("seed")
    if seed is not None:
        seed = _number(seed, "seed", int)
    return RunConfig(grid, rho_star, cutoff, integ, ic, output, windows, checks, seed)


def load_config(source: str | Path) -> RunConfig:
    """Load a JSON config file or a shipped preset name."""
    if str(source) in PRESETS:
        return parse_config(json.loads(json.dumps(PRESETS[str(source)])))
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(raw)


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2)


PRESETS: dict[str, dict] = {
    "preset-1d-fast": {
        "grid": {"d": 1, "N": 1024, "L": 400.0},
        "integrator": {"scheme": "strang-exponential", "dt": 0.05, "t_end": 200.0, "output_every": 20},
        "ic": {"type": "remark1", "epsilon": 1e-2},
        "output": {"csv_path": "preset-1d-fast.csv", "json_report_path": "preset-1d-fast.json"},
        "fit_windows": {"d1_a": [20.0, 200.0], "d0_u": [20.0, 200.0]},
    },
    "preset-3d-decay": {
        "grid": {"d": 3, "N": 64, "L": 200.0},
        "integrator": {"scheme": "strang-exponential", "dt": 0.02, "t_end": 50.0, "output_every": 25},
        "ic": {"type": "remark1", "epsilon": 1e-2},
        "output": {"csv_path": "preset-3d-decay.csv", "json_report_path": "preset-3d-decay.json"},
        "fit_windows": {"d0_u": [5.0, 50.0], "d1_u": [5.0, 50.0], "d1_a": [5.0, 50.0], "d2_a": [5.0, 50.0]},
    },
}


# -- initial conditions -------------------------------------------------------

def _centered_r2(grid: Grid) -> np.ndarray:
    r2 = np.zeros(grid.shape)
    for x in grid.coordinates():
        r2 = r2 + (x - 0.5 * grid.L) ** 2
    return r2


def make_remark1_ic(epsilon: float, grid: Grid, rho_star: float = 1.0,
                    warnings_out: list | None = None) -> State:
    """``rho0 = rho* + eps^(5/11) g``, every ``u0_i = eps^(5/11) g``,
    ``g = exp(-eps^(8/11) |x - center|^2)``."""
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    amp = epsilon ** (5.0 / 11.0)
    rate = epsilon ** (8.0 / 11.0)
    tail = math.exp(-rate * (0.5 * grid.L) ** 2)
    if tail >= 1e-12:
        msg = (f"Gaussian tail at the box boundary is {tail:.3e} of its peak "
               f"(needs < 1e-12); enlarge L")
        warnings.warn(msg, stacklevel=2)
        if warnings_out is not None:
            warnings_out.append(msg)
    bump = amp * np.exp(-rate * _centered_r2(grid))
    rho0 = rho_star + bump
    u0 = np.broadcast_to(bump, (grid.d,) + grid.shape).copy()
    return State(grid, np.log(rho0 / rho_star), u0, 0.0, rho_star)


def make_gaussian_ic(grid: Grid, amp_a: float, amp_u: float, width: float,
                     rho_star: float = 1.0) -> State:
    bump = np.exp(-_centered_r2(grid) / width**2)
    u0 = np.broadcast_to(amp_u * bump, (grid.d,) + grid.shape).copy()
    return State(grid, amp_a * bump, u0, 0.0, rho_star)


def make_single_mode_ic(grid: Grid, kappa, amp_a: float, amp_u: float,
                        rho_star: float = 1.0) -> State:
    """``a0 = amp_a cos(2 pi k.x / L)``, ``u0`` longitudinal with the same phase.

    For ``k = 0`` the mode is the mean: ``a0 = amp_a`` and every ``u0_i = amp_u``.
    """
    k = np.asarray(kappa, dtype=float)
    if k.shape != (grid.d,):
        raise ValueError(f"kappa must have {grid.d} entries")
    x = grid.coordinates()
    phase = sum(2 * np.pi * kj * xj / grid.L for kj, xj in zip(k, x))
    wave = np.cos(phase) * np.ones(grid.shape)
    norm = np.linalg.norm(k)
    direction = k / norm if norm > 0 else np.ones(grid.d)
    u0 = np.stack([amp_u * dj * wave for dj in direction])
    return State(grid, amp_a * wave, u0, 0.0, rho_star)


def build_initial_state(cfg: RunConfig, warnings_out: list | None = None) -> State:
    grid = cfg.make_grid()
    ic = cfg.ic
    kind = ic["type"]
    if kind == "remark1":
        return make_remark1_ic(ic["epsilon"], grid, cfg.rho_star, warnings_out)
    if kind == "gaussian":
        return make_gaussian_ic(grid, ic["amp_a"], ic["amp_u"], ic["width"], cfg.rho_star)
    if kind == "single_mode":
        return make_single_mode_ic(grid, ic["kappa"], ic["amp_a"], ic["amp_u"], cfg.rho_star)
    if kind == "file":
        s = load_snapshot(ic["path"])
        if s.grid != grid:
            raise ConfigError(f"ic.path: snapshot grid {s.grid} does not match configured grid {grid}")
        return s
    raise ConfigError(f"ic.type: unknown initial condition {kind!r}")


# -- snapshots ----------------------------------------------------------------
#
# Layout: one ASCII header line ``DESNAP1 <json>\n`` with keys d, N, L,
# rho_star, t; then (1+d) N^d little-endian float64 values: a, then u_1..u_d,
# each in row-major lattice order.

_MAGIC = b"DESNAP1 "


def save_snapshot(s: State, path) -> None:
    g = s.grid
    header = {"d": g.d, "N": g.N, "L": g.L, "rho_star": s.rho_star, "t": s.t}
    payload = np.concatenate([s.a[None], s.u]).astype("<f8", copy=False)
    with open(path, "wb") as fh:
        fh.write(_MAGIC + json.dumps(header).encode() + b"\n")
        fh.write(np.ascontiguousarray(payload).tobytes())


def load_snapshot(path) -> State:
    with open(path, "rb") as fh:
        line = fh.readline()
        body = fh.read()
    if not line.startswith(_MAGIC):
        raise ValueError(f"{path}: not a state snapshot (bad magic)")
    try:
        header = json.loads(line[len(_MAGIC):])
        grid = Grid(int(header["d"]), int(header["N"]), float(header["L"]))
        rho_star, t = float(header["rho_star"]), float(header["t"])
    except (KeyError, ValueError, TypeError) as exc:
        raise ValueError(f"{path}: invalid snapshot header ({exc})") from None
    expected = (1 + grid.d) * grid.N**grid.d
    if len(body) != 8 * expected:
        raise ValueError(f"{path}: payload has {len(body) // 8} values, header implies {expected}")
    data = np.frombuffer(body, dtype="<f8").reshape((1 + grid.d,) + grid.shape).astype(float)
    return State(grid, data[0], data[1:], t, rho_star)
