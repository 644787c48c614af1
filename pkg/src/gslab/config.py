"""Line-oriented scenario configuration: ``section.key = value`` per line.

Blank lines and lines starting with ``#`` are ignored. Unknown keys,
duplicate keys, and out-of-range values are rejected with the offending
line number. The only required key is model.eps; everything else has a
documented default. serialize_config emits every key in schema order,
so parse -> serialize -> parse is the identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import Grid
from .integrator import StepperConfig
from .model import Params, State
from .steady import gaussian_bump_ic, load_profile


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line


IC_KINDS = ("uniform", "bumps", "profile-file", "library-entry")
FORMATS = ("csv", "svg")


@dataclass
class ScenarioConfig:
    # model
    eps: float = math.nan  # required
    f: float = 0.04
    k: float = 0.065
    du: float = 5.0e-4
    dv: float = 2.5e-4
    # grid
    n_cells: int = 201
    length: float = 1.0
    # time
    dt: float = 0.05
    theta: float = 0.5
    horizon: float = 1000.0
    record_every: float = 1.0
    snapshot_times: tuple = ()
    # ic
    ic_kind: str = "uniform"
    u0: float = 1.0
    v0: float = 0.0
    p0: float = 1.0
    y0: float | None = None  # None means "equal to f"
    ic_path: str = ""
    ic_library: str = ""
    ic_entry: str = ""
    n_bumps: int = 3
    bump_seed: int = 0
    amp_u: float = 0.5
    amp_v: float = 0.25
    # analysis
    threshold: float = 0.05
    probe_x: float = 0.5
    # sweep / limit lists
    sweep_eps: tuple = (3e-3, 1e-3, 3e-4, 1e-4)
    limit_eps: tuple = (1e-2, 1e-3, 1e-4)
    # output
    out_dir: str = "out"
    formats: tuple = ("csv", "svg")

    def to_params(self, eps: float | None = None) -> Params:
        return Params(du=self.du, dv=self.dv, f=self.f, k=self.k,
                      eps=self.eps if eps is None else eps)

    def to_grid(self) -> Grid:
        return Grid(n_cells=self.n_cells, length=self.length)

    def to_stepper(self) -> StepperConfig:
        return StepperConfig(dt=self.dt, theta=self.theta,
                             record_every=self.record_every,
                             snapshot_times=self.snapshot_times,
                             probe_x=self.probe_x)

    @property
    def y0_value(self) -> float:
        return self.f if self.y0 is None else self.y0

    def initial_state(self, grid: Grid | None = None) -> State:
        grid = grid or self.to_grid()
        n = grid.n_cells
        if self.ic_kind == "uniform":
            u = np.full(n, self.u0)
            v = np.full(n, self.v0)
        elif self.ic_kind == "bumps":
            rng = np.random.default_rng(self.bump_seed)
            u, v = gaussian_bump_ic(grid, rng, self.n_bumps, self.amp_u, self.amp_v)
        elif self.ic_kind == "profile-file":
            u, v = load_profile(self.ic_path)
        elif self.ic_kind == "library-entry":
            u, v = load_profile(Path(self.ic_library) / f"{self.ic_entry}.csv")
        else:  # unreachable after validation
            raise ConfigError(f"unknown ic.kind {self.ic_kind!r}")
        if u.size != n:
            raise ConfigError(
                f"profile has {u.size} cells but the grid has {n}"
            )
        return State(u, v, np.full(n, self.p0), np.full(n, self.y0_value))


# schema: config key -> (attribute, type tag, validator)
def _positive(x):
    return x > 0


def _nonneg(x):
    return x >= 0


_SCHEMA: dict[str, tuple[str, str, object]] = {
    "model.eps": ("eps", "float", _nonneg),
    "model.f": ("f", "float", _nonneg),
    "model.k": ("k", "float", _nonneg),
    "model.du": ("du", "float", _positive),
    "model.dv": ("dv", "float", _positive),
    "grid.n_cells": ("n_cells", "int", lambda x: x >= 4),
    "grid.length": ("length", "float", _positive),
    "time.dt": ("dt", "float", _positive),
    "time.theta": ("theta", "float", lambda x: 0.0 <= x <= 1.0),
    "time.horizon": ("horizon", "float", _positive),
    "time.record_every": ("record_every", "float", _positive),
    "time.snapshot_times": ("snapshot_times", "floats", lambda xs: all(x >= 0 for x in xs)),
    "ic.kind": ("ic_kind", "str", lambda s: s in IC_KINDS),
    "ic.u0": ("u0", "float", _nonneg),
    "ic.v0": ("v0", "float", _nonneg),
    "ic.p0": ("p0", "float", _nonneg),
    "ic.y0": ("y0", "float", _nonneg),
    "ic.path": ("ic_path", "str", None),
    "ic.library": ("ic_library", "str", None),
    "ic.entry": ("ic_entry", "str", None),
    "ic.n_bumps": ("n_bumps", "int", _nonneg),
    "ic.bump_seed": ("bump_seed", "int", _nonneg),
    "ic.amp_u": ("amp_u", "float", lambda x: 0.0 <= x <= 1.0),
    "ic.amp_v": ("amp_v", "float", lambda x: 0.0 <= x <= 1.0),
    "analysis.threshold": ("threshold", "float", _positive),
    "analysis.probe_x": ("probe_x", "float", _nonneg),
    "sweep.eps_values": ("sweep_eps", "floats", lambda xs: all(x > 0 for x in xs)),
    "limit.eps_values": ("limit_eps", "floats", lambda xs: all(x > 0 for x in xs)),
    "output.directory": ("out_dir", "str", lambda s: bool(s)),
    "output.formats": ("formats", "strs", lambda xs: xs and all(x in FORMATS for x in xs)),
}


def _parse_value(raw: str, tag: str, line_no: int):
    raw = raw.strip()
    try:
        if tag == "float":
            return float(raw)
        if tag == "int":
            return int(raw)
        if tag == "str":
            return raw
        if tag == "floats":
            if raw == "":
                return ()
            return tuple(float(part) for part in raw.split(","))
        if tag == "strs":
            if raw == "":
                return ()
            return tuple(part.strip() for part in raw.split(","))
    except ValueError:
        pass
    raise ConfigError(f"cannot parse {raw!r} as {tag}", line_no)


def parse_config_text(text: str, base_dir: Path | str = ".") -> ScenarioConfig:
    cfg = ScenarioConfig()
    seen: dict[str, int] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'section.key = value', got {stripped!r}", line_no)
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r}", line_no)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} (first set on line {seen[key]})", line_no)
        seen[key] = line_no
        attr, tag, validator = _SCHEMA[key]
        value = _parse_value(raw, tag, line_no)
        if validator is not None and not validator(value):
            raise ConfigError(f"value {value!r} out of range for {key}", line_no)
        setattr(cfg, attr, value)

    if math.isnan(cfg.eps):
        raise ConfigError("model.eps is required")
    if cfg.y0 is None:
        cfg.y0 = cfg.f  # feed default: storage starts in balance with u = 1
    _validate_whole(cfg, base_dir)
    return cfg


def _validate_whole(cfg: ScenarioConfig, base_dir: Path | str):
    base = Path(base_dir)
    if cfg.record_every < cfg.dt:
        raise ConfigError(
            f"time.record_every ({cfg.record_every}) must be at least time.dt ({cfg.dt})"
        )
    if sorted(cfg.snapshot_times) != list(cfg.snapshot_times):
        raise ConfigError("time.snapshot_times must be sorted ascending")
    if cfg.snapshot_times and cfg.snapshot_times[-1] > cfg.horizon:
        raise ConfigError("time.snapshot_times must lie within [0, time.horizon]")
    if not 0.0 <= cfg.probe_x <= cfg.length:
        raise ConfigError(f"analysis.probe_x must lie in [0, {cfg.length}]")
    if cfg.ic_kind == "profile-file":
        if not cfg.ic_path:
            raise ConfigError("ic.kind = profile-file needs ic.path")
        path = base / cfg.ic_path
        if not path.exists():
            raise ConfigError(f"ic.path does not exist: {path}")
        cfg.ic_path = str(path)
    if cfg.ic_kind == "library-entry":
        if not cfg.ic_library or not cfg.ic_entry:
            raise ConfigError("ic.kind = library-entry needs ic.library and ic.entry")
        path = base / cfg.ic_library / f"{cfg.ic_entry}.csv"
        if not path.exists():
            raise ConfigError(f"library entry does not exist: {path}")
        cfg.ic_library = str(base / cfg.ic_library)
    if list(cfg.sweep_eps) != sorted(cfg.sweep_eps, reverse=True):
        raise ConfigError("sweep.eps_values must be sorted descending")
    if list(cfg.limit_eps) != sorted(cfg.limit_eps, reverse=True):
        raise ConfigError("limit.eps_values must be sorted descending")


def parse_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    return parse_config_text(text, base_dir=path.parent)


def _format_value(value, tag: str) -> str:
    if tag == "float":
        return f"{value:.17g}"
    if tag == "int":
        return str(value)
    if tag == "str":
        return str(value)
    if tag == "floats":
        return ",".join(f"{v:.17g}" for v in value)
    if tag == "strs":
        return ",".join(value)
    raise AssertionError(tag)


def serialize_config(cfg: ScenarioConfig) -> str:
    """Canonical text with every key present, in schema order."""
    lines = []
    for key, (attr, tag, _) in _SCHEMA.items():
        value = getattr(cfg, attr)
        if attr == "y0":
            value = cfg.y0_value
        lines.append(f"{key} = {_format_value(value, tag)}")
    return "\n".join(lines) + "\n"
