"""IMEX time stepping for the reversible system and its classical limit.

One step is a Lie split: first the reaction terms advance by forward
Euler, evaluated simultaneously at the pre-step state so that the exact
cancellation of rates in u + v + p + y/eps survives discretization;
then each diffusing field is advanced by a theta-scheme solved with the
prefactored Thomas algorithm. theta = 0.5 is Crank-Nicolson, theta = 1
backward Euler. There is no adaptive stepping: dt is what you asked for.

Positivity: after the full step, entries that went strictly negative
are raised to cfg.floor and counted. Exact zeros are left alone (they
are legitimate states, e.g. the boundary steady state has v = p = 0),
so steady states remain fixed points of the discrete step and a healthy
run reports zero floor events.

The free energy is monitored at record times, never enforced; records
where it rose by more than ENERGY_RISE_TOL * |F| are counted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .grid import Grid, integrate
from .model import Params, SigmaGauge, State, free_energy, make_sigma, total_mass
from .tridiag import thomas_factor

ENERGY_RISE_TOL = 1e-8


class DivergenceError(RuntimeError):
    """A field became non-finite; carries the time and any partial trajectory."""

    def __init__(self, time: float, trajectory: "Trajectory | None" = None):
        super().__init__(f"non-finite field value at t = {time:g}")
        self.time = time
        self.trajectory = trajectory


@dataclass(frozen=True)
class StepperConfig:
    dt: float = 0.05
    theta: float = 0.5
    floor: float = 1e-14
    record_every: float = 1.0
    snapshot_times: tuple[float, ...] = ()
    probe_x: float = 0.5

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        if self.floor < 0.0:
            raise ValueError(f"floor must be nonnegative, got {self.floor}")
        if self.record_every < self.dt:
            raise ValueError(
                f"record_every ({self.record_every}) must be at least dt ({self.dt})"
            )
        object.__setattr__(self, "snapshot_times", tuple(sorted(self.snapshot_times)))
        if self.snapshot_times and self.snapshot_times[0] < 0.0:
            raise ValueError("snapshot times must be nonnegative")


# ---------------------------------------------------------------------------
# jitted kernels


@njit(cache=True)
def _diffuse(b, lower, cp, inv_beta, r_expl, work):
    """theta-scheme update of one field, in place. Zero-flux faces."""
    n = b.size
    prev = 0.0
    for i in range(n):
        nxt = b[i + 1] - b[i] if i < n - 1 else 0.0
        work[i] = b[i] + r_expl * (nxt - prev)
        prev = nxt
    work[0] = work[0] * inv_beta[0]
    for i in range(1, n):
        work[i] = (work[i] - lower[i] * work[i - 1]) * inv_beta[i]
    b[n - 1] = work[n - 1]
    for i in range(n - 2, -1, -1):
        b[i] = work[i] - cp[i] * b[i + 1]


@njit(cache=True)
def _floor_field(a, floor):
    events = 0
    finite = True
    for i in range(a.size):
        ai = a[i]
        if not np.isfinite(ai):
            finite = False
        elif ai < 0.0:
            a[i] = floor
            events += 1
    return events, finite


@njit(cache=True)
def _step_var_kernel(u, v, p, y, eps, f, k, dt, floor,
                     lo_u, cp_u, ib_u, re_u,
                     lo_v, cp_v, ib_v, re_v, work):
    n = u.size
    kf = k + f
    for i in range(n):
        ui = u[i]
        vi = v[i]
        r1 = ui * vi * vi - eps * vi * vi * vi
        r2 = kf * vi - eps * p[i]
        r3 = f * ui - y[i]
        u[i] = ui + dt * (-r1 - r3)
        v[i] = vi + dt * (r1 - r2)
        p[i] = p[i] + dt * r2
        y[i] = y[i] + dt * (eps * r3)
    _diffuse(u, lo_u, cp_u, ib_u, re_u, work)
    _diffuse(v, lo_v, cp_v, ib_v, re_v, work)
    e_u, ok_u = _floor_field(u, floor)
    e_v, ok_v = _floor_field(v, floor)
    e_p, ok_p = _floor_field(p, floor)
    e_y, ok_y = _floor_field(y, floor)
    return e_u + e_v + e_p + e_y, ok_u and ok_v and ok_p and ok_y


@njit(cache=True)
def _step_cls_kernel(u, v, f, k, dt, floor,
                     lo_u, cp_u, ib_u, re_u,
                     lo_v, cp_v, ib_v, re_v, work):
    n = u.size
    kf = k + f
    for i in range(n):
        ui = u[i]
        vi = v[i]
        g = ui * vi * vi
        u[i] = ui + dt * (-g + f * (1.0 - ui))
        v[i] = vi + dt * (g - kf * vi)
    _diffuse(u, lo_u, cp_u, ib_u, re_u, work)
    _diffuse(v, lo_v, cp_v, ib_v, re_v, work)
    e_u, ok_u = _floor_field(u, floor)
    e_v, ok_v = _floor_field(v, floor)
    return e_u + e_v, ok_u and ok_v


# ---------------------------------------------------------------------------
# workspace: prefactored diffusion coefficients and scratch storage


class Workspace:
    """Prefactored theta-scheme coefficients for one (params, grid, cfg)."""

    def __init__(self, params: Params, grid: Grid, cfg: StepperConfig):
        self.n = grid.n_cells
        self.work = np.empty(self.n)
        self._u = self._factor(params.du, grid, cfg)
        self._v = self._factor(params.dv, grid, cfg)

    @staticmethod
    def _factor(diffusivity: float, grid: Grid, cfg: StepperConfig):
        r = diffusivity * cfg.dt / grid.dx**2
        n = grid.n_cells
        diag = np.full(n, 1.0 + 2.0 * cfg.theta * r)
        diag[0] = diag[-1] = 1.0 + cfg.theta * r
        lower = np.full(n, -cfg.theta * r)
        lower[0] = 0.0
        upper = np.full(n, -cfg.theta * r)
        upper[-1] = 0.0
        cp, inv_beta = thomas_factor(lower, diag, upper)
        return lower, cp, inv_beta, (1.0 - cfg.theta) * r

    def var_args(self):
        lo_u, cp_u, ib_u, re_u = self._u
        lo_v, cp_v, ib_v, re_v = self._v
        return lo_u, cp_u, ib_u, re_u, lo_v, cp_v, ib_v, re_v, self.work


def step_variational(state: State, params: Params, grid: Grid, cfg: StepperConfig,
                     workspace: Workspace | None = None) -> tuple[State, int]:
    """One IMEX step of the reversible system; returns (new state, floor events)."""
    params.require_reversible()
    if state.n_cells != grid.n_cells:
        raise ValueError(f"state has {state.n_cells} cells, grid has {grid.n_cells}")
    if workspace is None:
        workspace = Workspace(params, grid, cfg)
    out = state.copy()
    events, ok = _step_var_kernel(
        out.u, out.v, out.p, out.y,
        params.eps, params.f, params.k, cfg.dt, cfg.floor,
        *workspace.var_args(),
    )
    if not ok:
        raise DivergenceError(cfg.dt)
    return out, events


def step_classical(u, v, params: Params, grid: Grid, cfg: StepperConfig,
                   workspace: Workspace | None = None):
    """One IMEX step of the classical system; returns (u, v, floor events)."""
    if workspace is None:
        workspace = Workspace(params, grid, cfg)
    un = np.array(u, dtype=float)
    vn = np.array(v, dtype=float)
    events, ok = _step_cls_kernel(
        un, vn, params.f, params.k, cfg.dt, cfg.floor, *workspace.var_args()
    )
    if not ok:
        raise DivergenceError(cfg.dt)
    return un, vn, events


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class Trajectory:
    """Time series recorded during a run, plus any full-state snapshots.

    For classical runs total_mass and free_energy are NaN columns; the
    snapshot states carry p = y = 0.
    """

    times: np.ndarray
    amp_u: np.ndarray
    amp_v: np.ndarray
    u_probe: np.ndarray
    v_probe: np.ndarray
    mass_u: np.ndarray
    mass_v: np.ndarray
    total_mass: np.ndarray
    free_energy: np.ndarray
    snapshots: list = field(default_factory=list)
    floor_events: int = 0
    energy_increases: int = 0
    max_energy_rise: float = 0.0
    stopped_at: float | None = None

    def amplitude(self) -> np.ndarray:
        """max(amp_u, amp_v): the pattern size the persistence metric watches."""
        return np.maximum(self.amp_u, self.amp_v)

    @property
    def final_state(self) -> State:
        if not self.snapshots:
            raise ValueError("trajectory has no snapshots")
        return self.snapshots[-1][1]


class _Recorder:
    cols = ("times", "amp_u", "amp_v", "u_probe", "v_probe",
            "mass_u", "mass_v", "total_mass", "free_energy")

    def __init__(self):
        self.rows = {c: [] for c in self.cols}

    def add(self, **kw):
        for c in self.cols:
            self.rows[c].append(kw[c])

    def build(self, **extra) -> Trajectory:
        arrays = {c: np.asarray(self.rows[c]) for c in self.cols}
        return Trajectory(**arrays, **extra)


def _span(a: np.ndarray) -> float:
    return float(a.max() - a.min())


def simulate(initial: State, params: Params, grid: Grid, cfg: StepperConfig,
             horizon: float, stop_below_amplitude: float | None = None) -> Trajectory:
    """March the reversible system to the horizon, recording as configured.

    Records land at t = 0 and every cfg.record_every (rounded to a whole
    number of steps), plus the final step. Snapshots are deep copies
    taken at the step nearest each requested time. If
    stop_below_amplitude is set, the run ends at the first record whose
    pattern amplitude is at or below it (stopped_at notes the time).

    Raises DivergenceError, carrying the partial trajectory, if a field
    stops being finite.
    """
    params.require_reversible()
    sigma = make_sigma(params)
    if not horizon > 0.0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    if cfg.snapshot_times and cfg.snapshot_times[-1] > horizon:
        raise ValueError(
            f"snapshot time {cfg.snapshot_times[-1]} exceeds horizon {horizon}"
        )
    workspace = Workspace(params, grid, cfg)
    every = max(1, int(round(cfg.record_every / cfg.dt)))
    n_steps = int(round(horizon / cfg.dt))
    probe = grid.cell_index(cfg.probe_x)

    state = initial.copy()
    rec = _Recorder()
    snapshots: list[tuple[float, State]] = []
    pending = list(cfg.snapshot_times)  # already sorted by StepperConfig
    floor_events = 0
    energy_increases = 0
    max_rise = 0.0
    f_prev: float | None = None
    stopped_at: float | None = None

    def take_record(t: float) -> tuple[float, float]:
        nonlocal f_prev, energy_increases, max_rise
        f_now = free_energy(state, params, grid, sigma)
        if f_prev is not None:
            rise = f_now - f_prev
            if rise > ENERGY_RISE_TOL * abs(f_prev):
                energy_increases += 1
                max_rise = max(max_rise, rise)
        f_prev = f_now
        a_u, a_v = _span(state.u), _span(state.v)
        rec.add(
            times=t, amp_u=a_u, amp_v=a_v,
            u_probe=float(state.u[probe]), v_probe=float(state.v[probe]),
            mass_u=integrate(state.u, grid), mass_v=integrate(state.v, grid),
            total_mass=total_mass(state, params, grid),
            free_energy=f_now,
        )
        return a_u, a_v

    def take_snapshots(t: float):
        while pending and pending[0] <= t + 0.5 * cfg.dt:
            pending.pop(0)
            snapshots.append((t, state.copy()))

    take_record(0.0)
    take_snapshots(0.0)
    for step in range(1, n_steps + 1):
        t = step * cfg.dt
        events, ok = _step_var_kernel(
            state.u, state.v, state.p, state.y,
            params.eps, params.f, params.k, cfg.dt, cfg.floor,
            *workspace.var_args(),
        )
        floor_events += events
        if not ok:
            partial = rec.build(
                snapshots=snapshots, floor_events=floor_events,
                energy_increases=energy_increases, max_energy_rise=max_rise,
            )
            raise DivergenceError(t, partial)
        take_snapshots(t)
        if step % every == 0 or step == n_steps:
            a_u, a_v = take_record(t)
            if stop_below_amplitude is not None and max(a_u, a_v) <= stop_below_amplitude:
                stopped_at = t
                break
    return rec.build(
        snapshots=snapshots, floor_events=floor_events,
        energy_increases=energy_increases, max_energy_rise=max_rise,
        stopped_at=stopped_at,
    )


def simulate_classical(u0, v0, params: Params, grid: Grid, cfg: StepperConfig,
                       horizon: float) -> Trajectory:
    """March the classical system; mass/energy columns are NaN (not conserved)."""
    if not horizon > 0.0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    if cfg.snapshot_times and cfg.snapshot_times[-1] > horizon:
        raise ValueError(
            f"snapshot time {cfg.snapshot_times[-1]} exceeds horizon {horizon}"
        )
    workspace = Workspace(params, grid, cfg)
    every = max(1, int(round(cfg.record_every / cfg.dt)))
    n_steps = int(round(horizon / cfg.dt))
    probe = grid.cell_index(cfg.probe_x)

    u = np.array(u0, dtype=float)
    v = np.array(v0, dtype=float)
    zeros = np.zeros_like(u)
    rec = _Recorder()
    snapshots: list[tuple[float, State]] = []
    pending = list(cfg.snapshot_times)
    floor_events = 0

    def take_record(t: float):
        rec.add(
            times=t, amp_u=_span(u), amp_v=_span(v),
            u_probe=float(u[probe]), v_probe=float(v[probe]),
            mass_u=integrate(u, grid), mass_v=integrate(v, grid),
            total_mass=np.nan, free_energy=np.nan,
        )

    def take_snapshots(t: float):
        while pending and pending[0] <= t + 0.5 * cfg.dt:
            pending.pop(0)
            snapshots.append((t, State(u.copy(), v.copy(), zeros.copy(), zeros.copy())))

    take_record(0.0)
    take_snapshots(0.0)
    for step in range(1, n_steps + 1):
        t = step * cfg.dt
        events, ok = _step_cls_kernel(
            u, v, params.f, params.k, cfg.dt, cfg.floor, *workspace.var_args()
        )
        floor_events += events
        if not ok:
            partial = rec.build(snapshots=snapshots, floor_events=floor_events)
            raise DivergenceError(t, partial)
        take_snapshots(t)
        if step % every == 0 or step == n_steps:
            take_record(t)
    return rec.build(snapshots=snapshots, floor_events=floor_events)
