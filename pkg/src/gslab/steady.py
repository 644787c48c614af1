"""Steady states: uniform closed forms, Newton-polished profiles, pattern library.

The reversible system has exactly two uniform steady states for a given
conserved mass C: a boundary state with v = p = 0 (all mass stored in u
and y) and an interior state with every species positive. Both follow
in closed form from zeroing the three reaction rates under the mass
constraint.

Nonuniform steady patterns come from the classical limit: march the
classical system from randomized bump initial data until the amplitude
settles, then polish with a damped Newton iteration on the discrete
steady equations (analytic block-tridiagonal Jacobian, block Thomas
elimination). Polished profiles are deduplicated up to the x -> L - x
reflection, probed for nonlinear stability, and stored as a library
that later runs can draw initial conditions from.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import Grid, as_field, integrate
from .integrator import StepperConfig, Workspace, _step_cls_kernel
from .model import Params, State, total_mass

_CONSISTENCY_TOL = 1e-10


class NewtonError(RuntimeError):
    """Newton iteration failed; carries the last residual norm."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class UniformSteadyState:
    """One uniform steady state (concentration values, not fields)."""

    kind: str  # "boundary" or "interior"
    u: float
    v: float
    p: float
    y: float

    def ytilde(self, params: Params) -> float:
        params.require_reversible()
        return self.y / params.eps

    def values(self) -> tuple[float, float, float, float]:
        return (self.u, self.v, self.p, self.y)

    def as_state(self, grid: Grid) -> State:
        return State.uniform(grid, self.u, self.v, self.p, self.y)


def mass_constant(state: State, params: Params, grid: Grid) -> float:
    """The conserved constant C fixed by the initial data."""
    return total_mass(state, params, grid)


def uniform_steady_states(params: Params, mass: float, domain_measure: float = 1.0):
    """Both uniform steady states for conserved mass C = mass.

    Returns (boundary, interior). The boundary state carries all mass in
    u and y (v = p = 0); in the interior state the rates pin the ratios
    u : v : p : y = eps : 1 : (k+f)/eps : f*eps, and the mass constraint
    sets the scale through lam = eps + 1 + (k+f)/eps + f.
    """
    params.require_reversible()
    if params.f <= 0.0:
        raise ValueError("uniform steady states need f > 0")
    if not mass > 0.0:
        raise ValueError(f"conserved mass must be positive, got {mass}")
    eps, f, k = params.eps, params.f, params.k
    c_bar = mass / domain_measure

    u1 = eps * c_bar / (eps + f)
    boundary = UniformSteadyState("boundary", u1, 0.0, 0.0, f * u1)

    lam = eps + 1.0 + (k + f) / eps + f
    v2 = c_bar / lam
    interior = UniformSteadyState("interior", eps * v2, v2, (k + f) * v2 / eps, f * eps * v2)

    for st in (boundary, interior):
        _check_uniform(st, params, c_bar)
    return boundary, interior


def _check_uniform(st: UniformSteadyState, params: Params, c_bar: float) -> None:
    """Internal consistency: rates vanish and the mass adds up."""
    eps, f, k = params.eps, params.f, params.k
    scale = max(c_bar, 1.0)
    rates = (
        st.u * st.v**2 - eps * st.v**3,
        (k + f) * st.v - eps * st.p,
        f * st.u - st.y,
    )
    worst = max(abs(r) for r in rates)
    mass_err = abs(st.u + st.v + st.p + st.y / eps - c_bar)
    if worst > _CONSISTENCY_TOL * scale or mass_err > _CONSISTENCY_TOL * scale:
        raise AssertionError(
            f"closed-form {st.kind} state inconsistent: rates {worst:.2e}, mass {mass_err:.2e}"
        )


# ---------------------------------------------------------------------------
# Newton for classical steady profiles


def classical_residual(u, v, params: Params, grid: Grid):
    """Steady residual of the classical system (zero at a steady profile)."""
    from .model import rhs_classical

    return rhs_classical(u, v, params, grid)


def _assemble_jacobian_blocks(u, v, params: Params, grid: Grid):
    """2x2 blocks of the steady Jacobian: sub (A), diagonal (B), super (C)."""
    n = u.size
    inv_dx2 = 1.0 / grid.dx**2
    stencil = np.full(n, 2.0)
    stencil[0] = stencil[-1] = 1.0

    B = np.zeros((n, 2, 2))
    B[:, 0, 0] = -params.du * stencil * inv_dx2 - v * v - params.f
    B[:, 0, 1] = -2.0 * u * v
    B[:, 1, 0] = v * v
    B[:, 1, 1] = -params.dv * stencil * inv_dx2 + 2.0 * u * v - (params.k + params.f)

    off = np.array([[params.du * inv_dx2, 0.0], [0.0, params.dv * inv_dx2]])
    return B, off


def _solve_block_tridiag(B, off, r_u, r_v):
    """Block Thomas elimination for 2x2 blocks; constant off-diagonal blocks."""
    n = B.shape[0]
    rhs = np.stack([r_u, r_v], axis=1)
    cp = np.empty((n, 2, 2))
    dp = np.empty((n, 2))

    def inv2(m):
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if det == 0.0:
            raise NewtonError("singular diagonal block in elimination", np.inf)
        return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / det

    binv = inv2(B[0])
    cp[0] = binv @ off
    dp[0] = binv @ rhs[0]
    for i in range(1, n):
        denom = B[i] - off @ cp[i - 1]
        binv = inv2(denom)
        cp[i] = binv @ off
        dp[i] = binv @ (rhs[i] - off @ dp[i - 1])
    x = np.empty((n, 2))
    x[-1] = dp[-1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] @ x[i + 1]
    return x[:, 0], x[:, 1]


def newton_steady_classical(u0, v0, params: Params, grid: Grid,
                            tol: float = 1e-10, max_iter: int = 30):
    """Damped Newton on the discrete classical steady equations.

    Full steps with halving backtracking whenever the residual norm
    fails to drop. Returns (u, v, residual_max_norm). Raises NewtonError
    if max_iter is exhausted before the max-norm residual reaches tol.
    """
    u = as_field(u0, grid).copy()
    v = as_field(v0, grid).copy()

    def norm(ru, rv):
        return max(np.abs(ru).max(), np.abs(rv).max())

    r_u, r_v = classical_residual(u, v, params, grid)
    res = norm(r_u, r_v)
    for _ in range(max_iter):
        if res <= tol:
            return u, v, res
        B, off = _assemble_jacobian_blocks(u, v, params, grid)
        du_, dv_ = _solve_block_tridiag(B, off, -r_u, -r_v)
        lam = 1.0
        for _ in range(12):
            u_try = u + lam * du_
            v_try = v + lam * dv_
            r_u_try, r_v_try = classical_residual(u_try, v_try, params, grid)
            res_try = norm(r_u_try, r_v_try)
            if res_try < res or res_try <= tol:
                break
            lam *= 0.5
        else:
            raise NewtonError("damping failed to reduce the residual", res)
        u, v, r_u, r_v, res = u_try, v_try, r_u_try, r_v_try, res_try
    if res <= tol:
        return u, v, res
    raise NewtonError("no convergence within max_iter", res)


# ---------------------------------------------------------------------------
# nonlinear stability probe


def _smooth_perturbation(rng, grid: Grid, amplitude: float, n_modes: int = 4):
    """Random low-frequency combination, normalized to the given max-norm."""
    x = grid.cell_centers() / grid.length
    out = np.zeros(grid.n_cells)
    coeffs = rng.standard_normal(n_modes)
    for m, a in enumerate(coeffs, start=1):
        out += a * np.cos(m * np.pi * x)
    peak = np.abs(out).max()
    if peak == 0.0:  # all coefficients zero is astronomically unlikely, but cheap to guard
        out[:] = 1.0
        peak = 1.0
    return out * (amplitude / peak)


@dataclass
class ProbeResult:
    label: str  # "stable" | "unstable" | "undetermined"
    max_departure: float
    trial_departures: list


def stability_probe(u, v, params: Params, grid: Grid, cfg: StepperConfig,
                    amplitude: float = 1e-3, horizon: float = 500.0,
                    trials: int = 3, seed: int = 0,
                    escape: float = 0.05) -> ProbeResult:
    """Nonlinear stability of a classical steady profile.

    Each trial adds an independent smooth perturbation of the given
    max-norm amplitude to u and v and marches the classical system.
    A profile is "stable" if every trial stays within 10x the amplitude
    of the profile at the horizon, "unstable" if any trial departs
    beyond `escape` at any time, otherwise "undetermined".
    """
    u = as_field(u, grid)
    v = as_field(v, grid)
    rng = np.random.default_rng(seed)
    workspace = Workspace(params, grid, cfg)
    n_steps = int(round(horizon / cfg.dt))
    check_every = max(1, int(round(1.0 / cfg.dt)))  # departure looked at ~unit times
    return_radius = 10.0 * amplitude

    departures = []
    label = "stable"
    for _ in range(trials):
        up = np.clip(u + _smooth_perturbation(rng, grid, amplitude), 0.0, None)
        vp = np.clip(v + _smooth_perturbation(rng, grid, amplitude), 0.0, None)
        worst = 0.0
        escaped = False
        for step in range(1, n_steps + 1):
            _, ok = _step_cls_kernel(
                up, vp, params.f, params.k, cfg.dt, cfg.floor, *workspace.var_args()
            )
            if not ok:
                escaped = True  # blow-up counts as departure
                worst = np.inf
                break
            if step % check_every == 0 or step == n_steps:
                dist = max(np.abs(up - u).max(), np.abs(vp - v).max())
                worst = max(worst, dist)
                if dist > escape:
                    escaped = True
                    break
        departures.append(worst)
        if escaped:
            label = "unstable"
            break
        final_dist = max(np.abs(up - u).max(), np.abs(vp - v).max())
        if final_dist > return_radius:
            label = "undetermined"
    return ProbeResult(label, float(max(departures)), departures)


# ---------------------------------------------------------------------------
# pattern library


@dataclass
class ProfileSteadyState:
    """A classical steady profile plus bookkeeping for the library index."""

    profile_id: str
    u: np.ndarray
    v: np.ndarray
    residual: float
    stability: str
    pulse_count: int
    provenance: str


def gaussian_bump_ic(grid: Grid, rng, n_bumps: int, amp_u: float, amp_v: float):
    """Initial data u = 1 - amp_u * bumps, v = amp_v * bumps (clipped at 0).

    Bump centers keep away from the walls and widths span a few cells to
    a tenth of the domain, so the data stays resolvable on the grid.
    """
    x = grid.cell_centers()
    bumps = np.zeros(grid.n_cells)
    for _ in range(n_bumps):
        center = rng.uniform(0.15, 0.85) * grid.length
        width = rng.uniform(0.02, 0.08) * grid.length
        bumps += np.exp(-((x - center) ** 2) / (2.0 * width**2))
    u = np.clip(1.0 - amp_u * bumps, 0.0, None)
    v = np.clip(amp_v * bumps, 0.0, None)
    return u, v


def count_pulses(v, threshold: float = 0.05) -> int:
    """Local maxima of v above the threshold, wall cells included.

    Neumann walls carry half-pulses whose maximum sits in the boundary
    cell, so the ends count too. The asymmetric interior comparison
    (>= on the left, > on the right) counts a flat-topped pulse exactly
    once, at its right edge.
    """
    v = np.asarray(v)
    if v.size < 2:
        return int(v.size == 1 and v[0] > threshold)
    count = 0
    if v[0] > threshold and v[0] > v[1]:
        count += 1
    for i in range(1, v.size - 1):
        if v[i] > threshold and v[i] >= v[i - 1] and v[i] > v[i + 1]:
            count += 1
    if v[-1] > threshold and v[-1] > v[-2]:
        count += 1
    return count


def _profiles_match(a: ProfileSteadyState, b_u, b_v, tol: float) -> bool:
    direct = max(np.abs(a.u - b_u).max(), np.abs(a.v - b_v).max())
    mirrored = max(np.abs(a.u - b_u[::-1]).max(), np.abs(a.v - b_v[::-1]).max())
    return min(direct, mirrored) < tol


def generate_pattern_library(params: Params, grid: Grid, cfg: StepperConfig,
                             seed_count: int, rng_seed: int = 1,
                             march_time: float = 2000.0,
                             min_bumps: int = 1, max_bumps: int = 6,
                             newton_tol: float = 1e-10,
                             dedupe_tol: float = 1e-4,
                             probe_trials: int = 3,
                             probe_horizon: float = 500.0,
                             polish_every: float = 20.0,
                             polish_window: float = 400.0) -> list[ProfileSteadyState]:
    """Build a library of distinct classical steady profiles.

    Each seed marches random bump initial data to march_time. The steady
    profiles attract only weakly, so a transient typically lingers near
    one and then drains away; polishing only the settled end state would
    miss it. Newton therefore polishes the marching state every
    polish_every time units up to polish_window, and the end state too
    when its amplitude has stabilized (relative change below 1e-6 over
    the last tenth of the run). Converged profiles are deduplicated up
    to reflection and labelled by the nonlinear stability probe. Entries
    are sorted by pulse count then amplitude, so ids are stable for a
    given (seed_count, rng_seed).
    """
    rng = np.random.default_rng(rng_seed)
    workspace = Workspace(params, grid, cfg)
    n_steps = int(round(march_time / cfg.dt))
    check_every = max(1, int(round(1.0 / cfg.dt)))
    polish_stride = max(1, int(round(polish_every / cfg.dt)))
    tail = max(2, int(0.1 * march_time))  # amplitude samples in the last tenth

    candidates: list[ProfileSteadyState] = []

    def polish_and_add(u, v, provenance: str) -> None:
        try:
            u, v, res = newton_steady_classical(u.copy(), v.copy(), params, grid,
                                                tol=newton_tol)
        except NewtonError:
            return
        if any(_profiles_match(c, u, v, dedupe_tol) for c in candidates):
            return
        candidates.append(ProfileSteadyState(
            profile_id="", u=u, v=v, residual=res, stability="",
            pulse_count=count_pulses(v), provenance=provenance,
        ))

    for seed_idx in range(seed_count):
        if max_bumps <= 0:
            n_bumps = 0
            u = np.ones(grid.n_cells)
            v = np.zeros(grid.n_cells)
        else:
            n_bumps = int(rng.integers(min_bumps, max_bumps + 1))
            amp_u = rng.uniform(0.3, 0.9)
            amp_v = rng.uniform(0.3, 0.9)
            u, v = gaussian_bump_ic(grid, rng, n_bumps, amp_u, amp_v)
        amps = []
        diverged = False
        for step in range(1, n_steps + 1):
            _, ok = _step_cls_kernel(
                u, v, params.f, params.k, cfg.dt, cfg.floor, *workspace.var_args()
            )
            if not ok:
                diverged = True
                break
            t = step * cfg.dt
            if step % polish_stride == 0 and t <= polish_window and v.max() > 1e-3:
                polish_and_add(u, v, f"seed={seed_idx},bumps={n_bumps},t={t:g}")
            if step % check_every == 0:
                amps.append(max(u.max() - u.min(), v.max() - v.min()))
        if diverged:
            warnings.warn(f"library seed {seed_idx}: run diverged, skipped")
            continue
        window = np.asarray(amps[-tail:])
        settled = window.max() - window.min() <= max(1e-6 * window[-1], 1e-12)
        if settled:
            polish_and_add(u, v, f"seed={seed_idx},bumps={n_bumps},t={march_time:g}")

    candidates.sort(key=lambda c: (c.pulse_count, max(c.u.max() - c.u.min(),
                                                      c.v.max() - c.v.min())))
    for i, c in enumerate(candidates):
        c.profile_id = f"profile_{i:02d}"
        probe = stability_probe(
            c.u, c.v, params, grid, cfg,
            trials=probe_trials, horizon=probe_horizon, seed=rng_seed + 1000 + i,
        )
        c.stability = probe.label
    return candidates


# ---------------------------------------------------------------------------
# library on disk: index.csv plus one x,u,v file per profile


def save_library(library: list[ProfileSteadyState], grid: Grid, directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    x = grid.cell_centers()
    with open(directory / "index.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "residual", "stability", "pulse_count", "provenance"])
        for c in library:
            w.writerow([c.profile_id, f"{c.residual:.17g}", c.stability,
                        c.pulse_count, c.provenance])
    for c in library:
        with open(directory / f"{c.profile_id}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "u", "v"])
            for xi, ui, vi in zip(x, c.u, c.v):
                w.writerow([f"{xi:.17g}", f"{ui:.17g}", f"{vi:.17g}"])
    return directory


def load_library(directory) -> list[ProfileSteadyState]:
    directory = Path(directory)
    index = directory / "index.csv"
    if not index.exists():
        raise FileNotFoundError(f"no library index at {index}")
    out = []
    with open(index, newline="") as fh:
        for row in csv.DictReader(fh):
            u, v = load_profile(directory / f"{row['id']}.csv")
            out.append(ProfileSteadyState(
                profile_id=row["id"], u=u, v=v,
                residual=float(row["residual"]), stability=row["stability"],
                pulse_count=int(row["pulse_count"]), provenance=row["provenance"],
            ))
    return out


def load_profile(path):
    """Read an x,u,v profile file; returns (u, v)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no profile file at {path}")
    u, v = [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            u.append(float(row["u"]))
            v.append(float(row["v"]))
    return np.asarray(u), np.asarray(v)
