"""Reversible Gray-Scott kinetics, its free energy, and the classical limit.

Four species live on the grid: the substrate u, the activator v, the
product p, and a storage species tracked through y; the storage
concentration itself is ytilde = y / eps. Three reaction channels,
each with a reverse rate proportional to eps:

    r1 = u v^2 - eps v^3        autocatalysis  U + 2V <-> 3V
    r2 = (k + f) v - eps p      removal        V <-> P
    r3 = f u - y                resupply       U <-> X

Field equations:

    u_t = du u_xx - r1 - r3
    v_t = dv v_xx + r1 - r2
    p_t = r2
    y_t = eps r3

The combination u + v + p + y/eps is conserved pointwise up to
diffusion, hence its integral is a constant of the motion. With eps = 0
and y slaved to f, the u and v equations reduce to the classical
Gray-Scott system with feed f and removal k + f.

Each reaction channel is ideal against the reference potentials sigma
returned by make_sigma, which makes

    F = integral of sum_c c (ln c - 1 + sigma_c),  c in {u, v, p, ytilde}

a Lyapunov functional of the space-homogeneous dynamics (and, with the
diffusive fluxes, of the full system). The convention 0 ln 0 = 0
applies throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid, as_field, integrate, laplacian_neumann


@dataclass(frozen=True)
class Params:
    """Model constants. eps = 0 denotes the classical (irreversible) limit."""

    du: float = 5.0e-4
    dv: float = 2.5e-4
    f: float = 0.04
    k: float = 0.065
    eps: float = 0.0

    def __post_init__(self):
        if not (self.du > 0.0 and self.dv > 0.0):
            raise ValueError(f"diffusivities must be positive, got du={self.du}, dv={self.dv}")
        if self.f < 0.0 or self.k < 0.0:
            raise ValueError(f"rate constants must be nonnegative, got f={self.f}, k={self.k}")
        if self.eps < 0.0:
            raise ValueError(f"eps must be nonnegative, got {self.eps}")

    def require_reversible(self) -> None:
        if self.eps <= 0.0:
            raise ValueError("operation needs eps > 0 (reversible kinetics)")


@dataclass(frozen=True)
class SigmaGauge:
    """Reference chemical potentials fixed by detailed balance of the rates.

    Relative values are pinned by the three reactions; the overall
    constant is gauged by sigma_u = 0.
    """

    sigma_u: float
    sigma_v: float
    sigma_p: float
    sigma_ytilde: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.sigma_u, self.sigma_v, self.sigma_p, self.sigma_ytilde)


def make_sigma(params: Params) -> SigmaGauge:
    """Gauge with sigma_u = 0; needs eps, f, k+f all positive for the logs."""
    params.require_reversible()
    if params.f <= 0.0 or params.k + params.f <= 0.0:
        raise ValueError("sigma gauge undefined: needs f > 0 and k + f > 0")
    ln_eps = math.log(params.eps)
    return SigmaGauge(
        sigma_u=0.0,
        sigma_v=ln_eps,
        sigma_p=2.0 * ln_eps - math.log(params.k + params.f),
        sigma_ytilde=ln_eps - math.log(params.f),
    )


@dataclass
class State:
    """Concentration fields (u, v, p, y) on a common grid."""

    u: np.ndarray
    v: np.ndarray
    p: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        n = self.u.size
        for name in ("u", "v", "p", "y"):
            field = getattr(self, name)
            if field.ndim != 1 or field.size != n:
                raise ValueError(f"state field {name} has shape {field.shape}, expected ({n},)")

    @property
    def n_cells(self) -> int:
        return self.u.size

    def ytilde(self, params: Params) -> np.ndarray:
        params.require_reversible()
        return self.y / params.eps

    def copy(self) -> "State":
        return State(self.u.copy(), self.v.copy(), self.p.copy(), self.y.copy())

    @staticmethod
    def uniform(grid: Grid, u: float, v: float, p: float, y: float) -> "State":
        n = grid.n_cells
        return State(np.full(n, u), np.full(n, v), np.full(n, p), np.full(n, y))


@dataclass(frozen=True)
class ReactionRates:
    r1: np.ndarray
    r2: np.ndarray
    r3: np.ndarray


def reaction_rates(state: State, params: Params) -> ReactionRates:
    """Net forward rates of the three channels at the given state."""
    u, v, p, y = state.u, state.v, state.p, state.y
    r1 = u * v * v - params.eps * v**3
    r2 = (params.k + params.f) * v - params.eps * p
    r3 = params.f * u - y
    return ReactionRates(r1, r2, r3)


def rhs_variational(state: State, params: Params, grid: Grid):
    """Time derivatives (u_t, v_t, p_t, y_t) of the reversible system.

    The rates enter the four fields with weights (-1,-1), (+1,-1), (+1),
    (eps); summing u_t + v_t + p_t + y_t/eps cancels every rate exactly,
    leaving only the two diffusion terms.
    """
    params.require_reversible()
    r = reaction_rates(state, params)
    u_t = params.du * laplacian_neumann(state.u, grid) - r.r1 - r.r3
    v_t = params.dv * laplacian_neumann(state.v, grid) + r.r1 - r.r2
    p_t = r.r2
    y_t = params.eps * r.r3
    return u_t, v_t, p_t, y_t


def rhs_classical(u, v, params: Params, grid: Grid):
    """Time derivatives of the classical system with feed f, removal k + f."""
    u = as_field(u, grid)
    v = as_field(v, grid)
    uv2 = u * v * v
    u_t = params.du * laplacian_neumann(u, grid) - uv2 + params.f * (1.0 - u)
    v_t = params.dv * laplacian_neumann(v, grid) + uv2 - (params.k + params.f) * v
    return u_t, v_t


def _mixing_entropy(c: np.ndarray, sigma_c: float) -> np.ndarray:
    """c (ln c - 1 + sigma_c) with the 0 ln 0 = 0 convention."""
    if np.any(c < 0.0):
        raise ValueError(f"negative concentration (min {c.min():.3e}) has no free energy")
    out = np.full_like(c, 0.0)
    pos = c > 0.0
    cp = c[pos]
    out[pos] = cp * (np.log(cp) - 1.0 + sigma_c)
    return out


def free_energy(state: State, params: Params, grid: Grid, sigma: SigmaGauge | None = None) -> float:
    """Total free energy of the state; finite for nonnegative fields."""
    if sigma is None:
        sigma = make_sigma(params)
    density = (
        _mixing_entropy(state.u, sigma.sigma_u)
        + _mixing_entropy(state.v, sigma.sigma_v)
        + _mixing_entropy(state.p, sigma.sigma_p)
        + _mixing_entropy(state.ytilde(params), sigma.sigma_ytilde)
    )
    return integrate(density, grid)


def chemical_potentials(state: State, params: Params, sigma: SigmaGauge | None = None):
    """Pointwise mu_c = ln c + sigma_c for c in (u, v, p, ytilde).

    Zero concentrations yield -inf sentinels; callers must handle them.
    """
    if sigma is None:
        sigma = make_sigma(params)
    fields = (state.u, state.v, state.p, state.ytilde(params))
    sigmas = sigma.as_tuple()
    out = []
    for c, s in zip(fields, sigmas):
        if np.any(c < 0.0):
            raise ValueError("negative concentration has no chemical potential")
        with np.errstate(divide="ignore"):
            out.append(np.log(c) + s)
    return tuple(out)


def total_mass(state: State, params: Params, grid: Grid) -> float:
    """The conserved integral of u + v + p + y/eps."""
    if params.eps <= 0.0:
        raise ValueError(
            "total mass is only conserved for eps > 0; for the classical limit "
            "track the masses of u and v separately"
        )
    return integrate(state.u + state.v + state.p + state.y / params.eps, grid)
