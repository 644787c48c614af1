"""Cell-centered grid, quadrature, and the zero-flux Laplacian."""

import math

import numpy as np
import pytest

from gslab.grid import Grid, as_field, integrate, laplacian_neumann


def test_cell_geometry():
    grid = Grid(n_cells=10, length=2.0)
    assert grid.dx == pytest.approx(0.2)
    x = grid.cell_centers()
    assert x.shape == (10,)
    assert x[0] == pytest.approx(0.1)
    assert x[-1] == pytest.approx(1.9)
    assert np.allclose(np.diff(x), 0.2)


def test_grid_validation():
    with pytest.raises(ValueError, match="n_cells"):
        Grid(n_cells=3)
    with pytest.raises(ValueError, match="length"):
        Grid(n_cells=8, length=0.0)


def test_cell_index_nearest_center():
    grid = Grid(n_cells=10)
    assert grid.cell_index(0.0) == 0
    assert grid.cell_index(1.0) == 9
    assert grid.cell_index(0.05) == 0
    assert grid.cell_index(0.5) in (4, 5)  # midpoint between two centers
    assert grid.cell_index(0.55) == 5
    with pytest.raises(ValueError):
        grid.cell_index(-0.1)
    with pytest.raises(ValueError):
        grid.cell_index(1.1)


def test_as_field_validation():
    grid = Grid(n_cells=8)
    f = as_field([1] * 8, grid)
    assert f.dtype == float
    with pytest.raises(ValueError, match="shape"):
        as_field(np.ones(7), grid)
    with pytest.raises(ValueError, match="shape"):
        as_field(np.ones((8, 1)), grid)


def test_integrate_exact_for_linear_fields():
    # Midpoint quadrature integrates affine functions exactly.
    grid = Grid(n_cells=17, length=3.0)
    x = grid.cell_centers()
    a, b = 0.7, -0.3
    exact = a * 3.0 + b * 4.5  # integral of a + b x over (0, 3)
    assert integrate(a + b * x, grid) == pytest.approx(exact, rel=1e-14)


def test_integrate_uses_compensated_summation():
    # Alternating near-cancelling entries stay at the rounding level.
    grid = Grid(n_cells=1000)
    f = np.tile([1e16, -1e16], 500)
    assert integrate(f, grid) == 0.0


def test_laplacian_of_constant_is_zero():
    grid = Grid(n_cells=32)
    assert np.all(laplacian_neumann(np.full(32, 3.7), grid) == 0.0)


def test_laplacian_conserves_mass():
    # Zero-flux walls: the integral of the Laplacian telescopes to zero.
    rng = np.random.default_rng(7)
    grid = Grid(n_cells=64)
    for _ in range(5):
        f = rng.uniform(0.0, 5.0, grid.n_cells)
        total = integrate(laplacian_neumann(f, grid), grid)
        assert abs(total) < 1e-10  # summands are O(f / dx^2) ~ 2e4


def test_laplacian_matches_interior_stencil():
    grid = Grid(n_cells=16)
    f = np.arange(16.0) ** 2
    lap = laplacian_neumann(f, grid)
    inner = (f[2:] - 2 * f[1:-1] + f[:-2]) / grid.dx**2
    assert np.allclose(lap[1:-1], inner, rtol=1e-12)
    # Reflecting ghosts at the walls: single-sided differences.
    assert lap[0] == pytest.approx((f[1] - f[0]) / grid.dx**2)
    assert lap[-1] == pytest.approx((f[-2] - f[-1]) / grid.dx**2)


def test_laplacian_eigenmode():
    # cos(pi x) sampled at cell centers is an exact discrete eigenvector
    # with eigenvalue -(4 / dx^2) sin^2(pi dx / 2).
    grid = Grid(n_cells=64)
    x = grid.cell_centers()
    mode = np.cos(np.pi * x)
    lam = -(4.0 / grid.dx**2) * math.sin(math.pi * grid.dx / 2.0) ** 2
    assert np.allclose(laplacian_neumann(mode, grid), lam * mode, atol=1e-9)
