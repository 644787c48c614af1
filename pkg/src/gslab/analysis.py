"""Observables: amplitudes, lifetimes, energy scans, oscillations, fronts.

These are the measurements taken on states, trajectories, and uniform
steady states; none of them step the dynamics themselves.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .model import Params, State, make_sigma
from .steady import UniformSteadyState


def pattern_amplitude(state_or_u, v=None) -> float:
    """max over both species of (max - min); zero only for uniform states.

    Accepts either a State or the pair (u, v).
    """
    if isinstance(state_or_u, State):
        u, v = state_or_u.u, state_or_u.v
    else:
        if v is None:
            raise TypeError("pass a State or both u and v")
        u = np.asarray(state_or_u)
        v = np.asarray(v)
    return float(max(u.max() - u.min(), v.max() - v.min()))


# ---------------------------------------------------------------------------
# persistence


@dataclass(frozen=True)
class PersistenceResult:
    time: float
    censored: bool
    threshold: float
    horizon: float


def persistence_time(trajectory, threshold: float = 0.05) -> PersistenceResult:
    """First recorded time at which the pattern amplitude is <= threshold.

    Resolution is the record cadence. If the amplitude never crosses,
    the result is censored at the last recorded time.
    """
    if not threshold > 0.0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    amp = trajectory.amplitude()
    times = trajectory.times
    if times.size == 0:
        raise ValueError("trajectory has no records")
    below = np.nonzero(amp <= threshold)[0]
    horizon = float(times[-1])
    if below.size == 0:
        return PersistenceResult(horizon, True, threshold, horizon)
    return PersistenceResult(float(times[below[0]]), False, threshold, horizon)


def fit_scaling(eps_values, results) -> tuple[float, float, float]:
    """Least-squares fit ln T = slope * ln eps + intercept.

    Censored results are dropped with a warning. Returns
    (slope, intercept, r_squared); needs at least three usable points.
    """
    kept = [(e, r.time) for e, r in zip(eps_values, results) if not r.censored]
    dropped = len(results) - len(kept)
    if dropped:
        warnings.warn(f"fit_scaling: dropped {dropped} censored point(s)")
    if len(kept) < 3:
        raise ValueError(f"need at least 3 uncensored points, have {len(kept)}")
    x = np.log([e for e, _ in kept])
    z = np.log([t for _, t in kept])
    slope, intercept = np.polyfit(x, z, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((z - fitted) ** 2))
    ss_tot = float(np.sum((z - z.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r_squared


# ---------------------------------------------------------------------------
# energy landscape along reaction-coordinate directions


@dataclass(frozen=True)
class Direction:
    """A straight perturbation line in concentration space.

    components weight (u, v, p, y); the fourth slot scales the tracked
    y variable, so the storage concentration ytilde moves by
    components[3] / eps per unit delta. The named factory directions
    move single reaction coordinates:

        removal_shift  (0, -1, 1, 0)    one unit of V -> P
        storage_shift  (-1, 0, 0, eps)  one unit of U -> X
        autocat_shift  (-1, 1, 0, 0)    one unit of U -> V
    """

    components: tuple[float, float, float, float]
    name: str = "custom"

    def weights(self, params: Params) -> np.ndarray:
        """Concentration-space weights on (u, v, p, ytilde)."""
        params.require_reversible()
        d = self.components
        return np.array([d[0], d[1], d[2], d[3] / params.eps])


def removal_shift() -> Direction:
    return Direction((0.0, -1.0, 1.0, 0.0), "removal_shift")


def storage_shift(params: Params) -> Direction:
    params.require_reversible()
    return Direction((-1.0, 0.0, 0.0, params.eps), "storage_shift")


def autocat_shift() -> Direction:
    return Direction((-1.0, 1.0, 0.0, 0.0), "autocat_shift")


NAMED_DIRECTIONS = ("s1", "s2", "s3")


def named_direction(name: str, params: Params) -> Direction:
    """s1, s2, s3 aliases used by the command line."""
    if name == "s1":
        return removal_shift()
    if name == "s2":
        return storage_shift(params)
    if name == "s3":
        return autocat_shift()
    raise ValueError(f"unknown direction {name!r}; pick from {NAMED_DIRECTIONS}")


@dataclass
class ScanCurve:
    """Energy profile along base + delta * direction.

    energy and first_deriv are NaN where the line leaves the feasible
    cone (some moved species would need a nonpositive concentration);
    second_deriv is the rational expression sum w_i^2 / c_i(delta),
    which stays evaluable across the cone boundary and is reported
    wherever no denominator vanishes.
    """

    direction: Direction
    deltas: np.ndarray
    energy: np.ndarray
    first_deriv: np.ndarray
    second_deriv: np.ndarray
    feasible: np.ndarray


def _scan_grid(delta_min: float, delta_max: float, n_samples: int) -> np.ndarray:
    """Linear coverage of [delta_min, delta_max] plus geometric points near 0."""
    if not delta_min < delta_max:
        raise ValueError(f"need delta_min < delta_max, got [{delta_min}, {delta_max}]")
    if n_samples < 5:
        raise ValueError(f"need at least 5 samples, got {n_samples}")
    span = max(abs(delta_min), abs(delta_max))
    points = list(np.linspace(delta_min, delta_max, n_samples // 2))
    n_geo = max(n_samples - n_samples // 2 - 1, 2)
    geo = np.geomspace(span * 1e-8, span, n_geo)
    for g in geo:
        if delta_min <= g <= delta_max:
            points.append(g)
        if delta_min <= -g <= delta_max:
            points.append(-g)
    if delta_min <= 0.0 <= delta_max:
        points.append(0.0)
    return np.unique(np.asarray(points))


def landscape_scan(base: UniformSteadyState, direction: Direction, params: Params,
                   delta_min: float, delta_max: float, n_samples: int = 101,
                   domain_measure: float = 1.0) -> ScanCurve:
    """Free energy and its two delta-derivatives along a perturbation line.

    The base is uniform, so the energy is domain_measure times the
    pointwise value. Derivatives are analytic sums over the species the
    direction actually moves:

        dE/ddelta   = sum_i w_i (ln c_i + sigma_i)
        d2E/ddelta2 = sum_i w_i^2 / c_i
    """
    sigma = make_sigma(params)
    w = direction.weights(params)
    base_c = np.array([base.u, base.v, base.p, base.ytilde(params)])
    sig = np.array(sigma.as_tuple())
    deltas = _scan_grid(delta_min, delta_max, n_samples)
    moved = w != 0.0

    energy = np.full(deltas.size, np.nan)
    first = np.full(deltas.size, np.nan)
    second = np.full(deltas.size, np.nan)
    feasible = np.zeros(deltas.size, dtype=bool)
    for j, d in enumerate(deltas):
        c = base_c + d * w
        ok = bool(np.all(c[moved] > 0.0) and np.all(c >= 0.0))
        feasible[j] = ok
        if np.all(c[moved] != 0.0):
            second[j] = domain_measure * float(np.sum(w[moved] ** 2 / c[moved]))
        if ok:
            pos = c > 0.0
            energy[j] = domain_measure * float(
                np.sum(c[pos] * (np.log(c[pos]) - 1.0 + sig[pos]))
            )
            first[j] = domain_measure * float(
                np.sum(w[moved] * (np.log(c[moved]) + sig[moved]))
            )
    return ScanCurve(direction, deltas, energy, first, second, feasible)


def scan_derivatives_at(base: UniformSteadyState, direction: Direction,
                        params: Params, delta: float,
                        domain_measure: float = 1.0) -> tuple[float, float]:
    """(dE/ddelta, d2E/ddelta2) at a single delta; NaN first derivative
    if the point is outside the feasible cone."""
    sigma = make_sigma(params)
    w = direction.weights(params)
    base_c = np.array([base.u, base.v, base.p, base.ytilde(params)])
    sig = np.array(sigma.as_tuple())
    moved = w != 0.0
    c = base_c + delta * w
    first = np.nan
    second = np.nan
    if np.all(c[moved] != 0.0):
        second = domain_measure * float(np.sum(w[moved] ** 2 / c[moved]))
    if np.all(c[moved] > 0.0) and np.all(c >= 0.0):
        first = domain_measure * float(np.sum(w[moved] * (np.log(c[moved]) + sig[moved])))
    return first, second


# ---------------------------------------------------------------------------
# oscillation detection


@dataclass
class OscillationReport:
    peak_times: np.ndarray
    peak_values: np.ndarray
    heights: np.ndarray  # above the final series value
    ratios: np.ndarray  # successive height ratios
    oscillating: bool  # at least two peaks
    damped: bool  # every ratio below one

    @property
    def n_peaks(self) -> int:
        return int(self.peak_times.size)


_PLATEAU_TOL = 1e-12


def detect_oscillations(times, values) -> OscillationReport:
    """Find interior local maxima and assess their decay.

    A peak is a sample strictly above its neighbors, with runs of values
    within 1e-12 treated as flat (a plateau counts once, at its end).
    Heights are measured above the final value of the series; the decay
    is "damped" when every successive height ratio is below one. Fewer
    than two peaks means no oscillation.
    """
    t = np.asarray(times, dtype=float)
    s = np.asarray(values, dtype=float)
    if t.shape != s.shape or t.ndim != 1:
        raise ValueError("times and values must be matching 1-D arrays")
    if t.size < 3:
        return OscillationReport(np.empty(0), np.empty(0), np.empty(0),
                                 np.empty(0), False, False)
    d = np.diff(s)
    trend = np.where(np.abs(d) <= _PLATEAU_TOL, 0, np.sign(d)).astype(int)
    peaks = []
    last_move = 0
    for i, tr in enumerate(trend):
        if tr > 0:
            last_move = 1
        elif tr < 0:
            if last_move == 1:
                peaks.append(i)  # s rose into index i, falls after it
            last_move = -1
    peaks = np.asarray(peaks, dtype=int)
    peak_t = t[peaks]
    peak_v = s[peaks]
    heights = peak_v - s[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = heights[1:] / heights[:-1] if heights.size > 1 else np.empty(0)
    oscillating = peaks.size >= 2
    damped = bool(oscillating and heights.size > 1 and np.all(ratios < 1.0))
    return OscillationReport(peak_t, peak_v, heights, ratios, oscillating, damped)


# ---------------------------------------------------------------------------
# front tracking


@dataclass
class FrontTrack:
    times: np.ndarray
    locations: np.ndarray
    at_boundary: np.ndarray  # True where the minimum sat in an edge cell
    speed: float
    speed_stderr: float


def track_front(snapshots, grid, fit_window: int | None = None) -> FrontTrack:
    """Follow the minimum of u through (time, field) snapshots.

    snapshots: iterable of (t, u_field) or (t, State). The minimum is
    refined to sub-cell accuracy with a parabola through the three cells
    around the argmin; edge minima are flagged and left unrefined. The
    speed is the least-squares slope of location against time over the
    last fit_window snapshots (all of them by default).
    """
    times, locs, flags = [], [], []
    x = grid.cell_centers()
    for t, snap in snapshots:
        u = snap.u if isinstance(snap, State) else np.asarray(snap)
        i = int(np.argmin(u))
        if i == 0 or i == u.size - 1:
            times.append(t)
            locs.append(x[i])
            flags.append(True)
            continue
        a, b, c = u[i - 1], u[i], u[i + 1]
        denom = a - 2.0 * b + c
        offset = 0.0 if denom == 0.0 else 0.5 * (a - c) / denom
        times.append(t)
        locs.append(x[i] + offset * grid.dx)
        flags.append(False)
    times = np.asarray(times)
    locs = np.asarray(locs)
    flags = np.asarray(flags, dtype=bool)
    if times.size < 2:
        raise ValueError("need at least two snapshots to measure a speed")
    k = times.size if fit_window is None else min(fit_window, times.size)
    tt, ll = times[-k:], locs[-k:]
    slope, intercept = np.polyfit(tt, ll, 1)
    resid = ll - (slope * tt + intercept)
    dof = max(k - 2, 1)
    var = float(resid @ resid) / dof
    denom = float(np.sum((tt - tt.mean()) ** 2))
    stderr = np.sqrt(var / denom) if denom > 0 else np.inf
    return FrontTrack(times, locs, flags, float(slope), float(stderr))
