"""Shared fixtures.

The pattern library is expensive (~30 s) and deterministic, so it is
built once per session and shared between the unit tests and the
acceptance suite. Everything else is cheap enough to build per test.
"""

from __future__ import annotations

import numpy as np
import pytest

from gslab.grid import Grid
from gslab.integrator import StepperConfig
from gslab.model import Params, State
from gslab.steady import generate_pattern_library, save_library

# The canonical generation recipe: 64 random seeds, generator seed 1.
LIBRARY_SEED_COUNT = 64
LIBRARY_RNG_SEED = 1


@pytest.fixture(scope="session")
def grid256() -> Grid:
    return Grid(n_cells=256)


@pytest.fixture(scope="session")
def grid201() -> Grid:
    return Grid(n_cells=201)


@pytest.fixture(scope="session")
def classical_params() -> Params:
    """Canonical rate constants with irreversible kinetics."""
    return Params()


@pytest.fixture(scope="session")
def params_eps2() -> Params:
    """Canonical rate constants at the moderate reversibility eps = 1e-2."""
    return Params(eps=1e-2)


@pytest.fixture(scope="session")
def library(grid256):
    """The full deterministic pattern library (session-wide, ~30 s once)."""
    return generate_pattern_library(
        Params(), grid256, StepperConfig(dt=0.05),
        seed_count=LIBRARY_SEED_COUNT, rng_seed=LIBRARY_RNG_SEED,
    )


@pytest.fixture(scope="session")
def library_dir(library, grid256, tmp_path_factory):
    """The same library saved to disk, for file-based consumers."""
    directory = tmp_path_factory.mktemp("library")
    return save_library(library, grid256, directory)


@pytest.fixture(scope="session")
def stable_pattern(library):
    """The lowest-id stable non-uniform profile: the standard pattern IC."""
    entries = [e for e in library if e.stability == "stable" and e.pulse_count > 0]
    assert entries, "library holds no stable non-uniform profile"
    return entries[0]


def pattern_state(entry, grid: Grid, p0: float = 1.0, y0: float = 0.04) -> State:
    """Four-field initial state from a library profile with flat p and y."""
    n = grid.n_cells
    return State(entry.u.copy(), entry.v.copy(), np.full(n, p0), np.full(n, y0))
