"""Time stepping: fixed points, conservation, accuracy orders, determinism."""

import math

import numpy as np
import pytest

from gslab.grid import Grid, integrate
from gslab.integrator import (
    DivergenceError,
    StepperConfig,
    Workspace,
    simulate,
    simulate_classical,
    step_classical,
    step_variational,
)
from gslab.model import Params, State, total_mass
from gslab.steady import uniform_steady_states


def bump_state(grid, eps_free=False):
    x = grid.cell_centers()
    u = 1.0 - 0.5 * np.exp(-((x - 0.5) ** 2) / 0.01)
    v = 0.25 * np.exp(-((x - 0.5) ** 2) / 0.01)
    n = grid.n_cells
    return State(u, v, np.full(n, 1.0), np.full(n, 0.04))


def test_stepper_config_validation():
    with pytest.raises(ValueError, match="dt"):
        StepperConfig(dt=0.0)
    with pytest.raises(ValueError, match="theta"):
        StepperConfig(theta=1.5)
    with pytest.raises(ValueError, match="record_every"):
        StepperConfig(dt=0.1, record_every=0.05)
    with pytest.raises(ValueError, match="floor"):
        StepperConfig(floor=-1e-10)
    with pytest.raises(ValueError, match="snapshot"):
        StepperConfig(snapshot_times=(-1.0,))


def test_uniform_steady_states_are_discrete_fixed_points():
    grid = Grid(n_cells=64)
    params = Params(eps=1e-2)
    cfg = StepperConfig(dt=0.05)
    for st in uniform_steady_states(params, 6.0):
        state = st.as_state(grid)
        new, events = step_variational(state, params, grid, cfg)
        assert events == 0
        for name in ("u", "v", "p", "y"):
            assert np.abs(getattr(new, name) - getattr(state, name)).max() <= 1e-12


def test_classical_trivial_state_is_fixed():
    grid = Grid(n_cells=32)
    params = Params()
    u0 = np.ones(32)
    v0 = np.zeros(32)
    u1, v1, events = step_classical(u0, v0, params, grid, StepperConfig(dt=0.05))
    assert events == 0
    assert np.array_equal(u1, u0)
    assert np.array_equal(v1, v0)


def test_workspace_reuse_is_bit_identical():
    grid = Grid(n_cells=48)
    params = Params(eps=1e-2)
    cfg = StepperConfig(dt=0.05)
    state = bump_state(grid)
    shared = Workspace(params, grid, cfg)
    a, _ = step_variational(state, params, grid, cfg, workspace=shared)
    b, _ = step_variational(state, params, grid, cfg)
    assert np.array_equal(a.u, b.u) and np.array_equal(a.v, b.v)
    assert np.array_equal(a.p, b.p) and np.array_equal(a.y, b.y)


def test_floor_raises_negative_entries_and_counts():
    # A large explicit reaction step drives u below zero everywhere;
    # the floor lifts the entries and reports one event per cell.
    grid = Grid(n_cells=16)
    params = Params(eps=1e-2)
    cfg = StepperConfig(dt=1.0, record_every=1.0)
    state = State.uniform(grid, 0.01, 3.0, 0.0, 0.0)
    new, events = step_variational(state, params, grid, cfg)
    assert events >= grid.n_cells
    assert np.all(new.u >= 0.0)
    assert np.all(new.u <= 2 * cfg.floor)


def test_per_step_mass_rates_are_exact():
    # Reactions are evaluated simultaneously at the pre-step state and
    # diffusion moves no mass, so the discrete per-step balance of each
    # integral equals the continuous rate at the old state exactly.
    grid = Grid(n_cells=201)
    params = Params()
    cfg = StepperConfig(dt=0.05)
    state = bump_state(grid)
    m_u0 = integrate(state.u, grid)
    m_v0 = integrate(state.v, grid)
    rate_u = params.f * (1.0 - m_u0) - integrate(state.u * state.v**2, grid)
    rate_v = integrate(state.u * state.v**2, grid) - (params.k + params.f) * m_v0
    u1, v1, _ = step_classical(state.u, state.v, params, grid, cfg)
    assert (integrate(u1, grid) - m_u0) / cfg.dt == pytest.approx(rate_u, abs=1e-12)
    assert (integrate(v1, grid) - m_v0) / cfg.dt == pytest.approx(rate_v, abs=1e-12)


def test_variational_total_mass_is_conserved():
    grid = Grid(n_cells=201)
    params = Params(eps=1e-2)
    state = bump_state(grid)
    m0 = total_mass(state, params, grid)
    traj = simulate(state, params, grid, StepperConfig(dt=0.05), horizon=20.0)
    drift = np.abs(traj.total_mass - m0).max()
    assert drift <= 1e-12 * m0
    assert traj.floor_events == 0
    assert traj.energy_increases == 0


def test_record_cadence_and_snapshots():
    grid = Grid(n_cells=32)
    params = Params(eps=1e-2)
    cfg = StepperConfig(dt=0.05, record_every=0.2, snapshot_times=(0.0, 0.5, 1.0))
    traj = simulate(bump_state(grid), params, grid, cfg, horizon=1.0)
    assert np.allclose(traj.times, [0.0, 0.2, 0.4, 0.6, 0.8, 1.0])
    assert [t for t, _ in traj.snapshots] == [0.0, 0.5, 1.0]
    assert isinstance(traj.final_state, State)
    assert traj.final_state.n_cells == 32


def test_classical_trajectory_has_nan_mass_energy_and_empty_py():
    grid = Grid(n_cells=32)
    state = bump_state(grid)
    cfg = StepperConfig(dt=0.05, snapshot_times=(0.5,))
    traj = simulate_classical(state.u, state.v, Params(), grid, cfg, horizon=1.0)
    assert np.all(np.isnan(traj.total_mass))
    assert np.all(np.isnan(traj.free_energy))
    _, snap = traj.snapshots[0]
    assert np.all(snap.p == 0.0) and np.all(snap.y == 0.0)


def test_amplitude_is_max_over_both_species():
    grid = Grid(n_cells=32)
    params = Params(eps=1e-2)
    state = bump_state(grid)
    traj = simulate(state, params, grid, StepperConfig(dt=0.05), horizon=0.1)
    assert traj.amplitude()[0] == pytest.approx(
        max(state.u.max() - state.u.min(), state.v.max() - state.v.min()), rel=1e-12
    )


def test_early_stop_on_amplitude():
    # A smooth perturbation of the stable interior state relaxes quickly;
    # the run must stop at the first record at or below the threshold.
    grid = Grid(n_cells=64)
    params = Params(eps=1e-2)
    _, interior = uniform_steady_states(params, 6.0)
    state = interior.as_state(grid)
    x = grid.cell_centers()
    state.v = state.v + 0.2 * np.cos(np.pi * x)
    traj = simulate(state, params, grid, StepperConfig(dt=0.05), horizon=500.0,
                    stop_below_amplitude=0.05)
    assert traj.stopped_at is not None
    assert traj.stopped_at < 500.0
    assert traj.amplitude()[-1] <= 0.05
    assert np.all(traj.amplitude()[:-1] > 0.05)


def test_divergence_raises_with_partial_trajectory():
    grid = Grid(n_cells=16)
    params = Params(eps=1e-2)
    state = State.uniform(grid, 1e200, 1e200, 0.0, 0.0)
    with pytest.raises(DivergenceError) as err:
        simulate(state, params, grid, StepperConfig(dt=0.05), horizon=1.0)
    assert err.value.time == pytest.approx(0.05)
    assert err.value.trajectory is not None
    assert err.value.trajectory.times.size >= 1


def test_determinism_bit_identical():
    grid = Grid(n_cells=64)
    params = Params(eps=1e-2)
    cfg = StepperConfig(dt=0.05)
    a = simulate(bump_state(grid), params, grid, cfg, horizon=5.0)
    b = simulate(bump_state(grid), params, grid, cfg, horizon=5.0)
    assert np.array_equal(a.amp_u, b.amp_u)
    assert np.array_equal(a.free_energy, b.free_energy)
    assert np.array_equal(a.final_state.u, b.final_state.u) \
        if a.snapshots else True


def _diffusion_mode_setup(n_cells=200):
    grid = Grid(n_cells=n_cells)
    params = Params(f=0.0, k=0.0)  # with v = 0 the u equation is pure diffusion
    x = grid.cell_centers()
    mode = np.cos(np.pi * x)
    lam = -params.du * (4.0 / grid.dx**2) * math.sin(math.pi * grid.dx / 2.0) ** 2
    return grid, params, mode, lam


def test_diffusion_mode_decay_rate():
    grid, params, mode, _ = _diffusion_mode_setup()
    u0 = 1.0 + 0.3 * mode
    v0 = np.zeros(grid.n_cells)
    horizon = 100.0
    traj = simulate_classical(u0, v0, params, grid, StepperConfig(dt=0.05), horizon)
    rate = -math.log(traj.amp_u[-1] / traj.amp_u[0]) / horizon
    assert rate == pytest.approx(params.du * math.pi**2, rel=0.01)


@pytest.mark.parametrize("theta,nominal", [(1.0, 1.0), (0.5, 2.0)])
def test_dt_refinement_order(theta, nominal):
    # Against the exact decay of the discrete eigenmode, halving dt must
    # shrink the time error by 2^order for the theta scheme in use.
    grid, params, mode, lam = _diffusion_mode_setup()
    u0 = 1.0 + 0.3 * mode
    v0 = np.zeros(grid.n_cells)
    horizon = 1.0
    exact = 1.0 + 0.3 * math.exp(lam * horizon) * mode
    errors = []
    for dt in (0.5, 0.25, 0.125):
        cfg = StepperConfig(dt=dt, theta=theta, record_every=dt,
                            snapshot_times=(horizon,))
        traj = simulate_classical(u0, v0, params, grid, cfg, horizon)
        errors.append(np.abs(traj.final_state.u - exact).max())
    orders = [math.log2(errors[i] / errors[i + 1]) for i in range(2)]
    for order in orders:
        assert order == pytest.approx(nominal, rel=0.2)
