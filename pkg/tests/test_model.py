"""Kinetics, conservation structure, free energy, and potentials."""

import math

import numpy as np
import pytest

from gslab.grid import Grid, integrate, laplacian_neumann
from gslab.model import (
    Params,
    State,
    chemical_potentials,
    free_energy,
    make_sigma,
    reaction_rates,
    rhs_classical,
    rhs_variational,
    total_mass,
)
from gslab.steady import uniform_steady_states


def random_positive_state(rng, n):
    return State(
        rng.uniform(0.05, 3.0, n),
        rng.uniform(0.05, 3.0, n),
        rng.uniform(0.05, 3.0, n),
        rng.uniform(0.05, 3.0, n),
    )


def test_params_validation():
    with pytest.raises(ValueError, match="diffusivities"):
        Params(du=0.0)
    with pytest.raises(ValueError, match="nonnegative"):
        Params(f=-0.1)
    with pytest.raises(ValueError, match="eps"):
        Params(eps=-1e-3)
    with pytest.raises(ValueError, match="eps > 0"):
        Params(eps=0.0).require_reversible()


def test_state_validation_and_copy():
    grid = Grid(n_cells=6)
    with pytest.raises(ValueError, match="state field"):
        State(np.ones(6), np.ones(6), np.ones(5), np.ones(6))
    st = State.uniform(grid, 1.0, 2.0, 3.0, 4.0)
    cp = st.copy()
    cp.u[0] = 99.0
    assert st.u[0] == 1.0


def test_sigma_gauge_values():
    # Reference potentials pinned by detailed balance, gauged to sigma_u = 0.
    sigma = make_sigma(Params(eps=1e-2))
    assert sigma.sigma_u == 0.0
    assert sigma.sigma_v == pytest.approx(math.log(1e-2), abs=1e-15)
    assert sigma.sigma_v == pytest.approx(-4.605170185988091, abs=1e-12)
    assert sigma.sigma_p == pytest.approx(2 * math.log(1e-2) - math.log(0.105), abs=1e-15)
    assert sigma.sigma_p == pytest.approx(-6.956545443151568, abs=1e-12)
    assert sigma.sigma_ytilde == pytest.approx(math.log(1e-2) - math.log(0.04), abs=1e-15)
    assert sigma.sigma_ytilde == pytest.approx(-1.3862943611198906, abs=1e-12)


def test_sigma_requires_reversible_rates():
    with pytest.raises(ValueError):
        make_sigma(Params(eps=0.0))
    with pytest.raises(ValueError, match="sigma gauge"):
        make_sigma(Params(eps=1e-2, f=0.0))


def test_reaction_rates_reference_point():
    grid = Grid(n_cells=4)
    state = State.uniform(grid, 1.0, 1.0, 0.0, 0.0)
    r = reaction_rates(state, Params(eps=1e-2))
    assert np.allclose(r.r1, 0.99)
    assert np.allclose(r.r2, 0.105)
    assert np.allclose(r.r3, 0.04)


def test_reverse_rates_scale_with_eps():
    grid = Grid(n_cells=4)
    state = State.uniform(grid, 0.0, 1.0, 1.0, 0.0)
    r = reaction_rates(state, Params(eps=1e-3))
    assert np.allclose(r.r1, -1e-3)  # pure reverse autocatalysis: -eps v^3
    assert np.allclose(r.r2, 0.105 - 1e-3)


def test_rhs_pointwise_cancellation():
    # u_t + v_t + p_t + y_t / eps has no reaction part left, only diffusion.
    rng = np.random.default_rng(0)
    grid = Grid(n_cells=48)
    params = Params(eps=1e-2)
    for _ in range(20):
        state = random_positive_state(rng, grid.n_cells)
        u_t, v_t, p_t, y_t = rhs_variational(state, params, grid)
        diffusion = (params.du * laplacian_neumann(state.u, grid)
                     + params.dv * laplacian_neumann(state.v, grid))
        residual = u_t + v_t + p_t + y_t / params.eps - diffusion
        assert np.abs(residual).max() < 1e-13


def test_classical_rhs_balances():
    grid = Grid(n_cells=32)
    params = Params()
    rng = np.random.default_rng(5)
    u = rng.uniform(0.1, 1.0, grid.n_cells)
    v = rng.uniform(0.0, 0.5, grid.n_cells)
    u_t, v_t = rhs_classical(u, v, params, grid)
    uv2 = u * v * v
    assert np.allclose(u_t, params.du * laplacian_neumann(u, grid) - uv2 + params.f * (1 - u))
    assert np.allclose(v_t, params.dv * laplacian_neumann(v, grid) + uv2 - (params.k + params.f) * v)


def test_total_mass_definition_and_classical_refusal():
    grid = Grid(n_cells=10)
    params = Params(eps=1e-2)
    state = State.uniform(grid, 1.0, 0.0, 1.0, 0.04)
    assert total_mass(state, params, grid) == pytest.approx(6.0, rel=1e-14)
    with pytest.raises(ValueError, match="classical"):
        total_mass(state, Params(eps=0.0), grid)


def test_free_energy_zero_concentration_convention():
    # 0 ln 0 = 0: states with exact zeros have finite energy.
    grid = Grid(n_cells=8)
    params = Params(eps=1e-2)
    state = State.uniform(grid, 1.2, 0.0, 0.0, 0.048)
    value = free_energy(state, params, grid)
    sigma = make_sigma(params)
    expected = 1.2 * (math.log(1.2) - 1.0) + 4.8 * (math.log(4.8) - 1.0 + sigma.sigma_ytilde)
    assert value == pytest.approx(expected, rel=1e-12)


def test_free_energy_rejects_negative_fields():
    grid = Grid(n_cells=8)
    state = State.uniform(grid, 1.0, 1.0, 1.0, 1.0)
    state.v[3] = -1e-9
    with pytest.raises(ValueError, match="negative concentration"):
        free_energy(state, Params(eps=1e-2), grid)


def test_interior_state_equalizes_chemical_potentials():
    # At the interior steady state every species sits at the same potential,
    # so F = C * (mu - 1) with mu = ln(eps * v2).
    grid = Grid(n_cells=16)
    params = Params(eps=1e-2)
    _, interior = uniform_steady_states(params, 6.0)
    state = interior.as_state(grid)
    mus = chemical_potentials(state, params)
    mu = math.log(params.eps * interior.v)
    for series in mus:
        assert np.allclose(series, mu, atol=1e-12)
    assert free_energy(state, params, grid) == pytest.approx(6.0 * (mu - 1.0), rel=1e-12)


def test_chemical_potentials_zero_gives_neg_inf():
    grid = Grid(n_cells=4)
    params = Params(eps=1e-2)
    state = State.uniform(grid, 1.0, 0.0, 1.0, 0.04)
    mu_u, mu_v, mu_p, mu_y = chemical_potentials(state, params)
    assert np.all(np.isneginf(mu_v))
    assert np.all(np.isfinite(mu_u))
    state.u[0] = -0.5
    with pytest.raises(ValueError):
        chemical_potentials(state, params)
