"""Thomas solver against dense reference solutions."""

import numpy as np

from gslab.tridiag import thomas_apply, thomas_factor, thomas_solve


def random_dominant_system(rng, n):
    """Random strictly diagonally dominant tridiagonal system."""
    lower = rng.uniform(-1.0, 1.0, n)
    upper = rng.uniform(-1.0, 1.0, n)
    lower[0] = 0.0
    upper[-1] = 0.0
    diag = np.abs(lower) + np.abs(upper) + rng.uniform(1.0, 3.0, n)
    rhs = rng.uniform(-5.0, 5.0, n)
    dense = np.diag(diag)
    for i in range(1, n):
        dense[i, i - 1] = lower[i]
        dense[i - 1, i] = upper[i - 1]
    return lower, diag, upper, rhs, dense


def test_thomas_solve_matches_dense():
    rng = np.random.default_rng(42)
    for n in (4, 5, 17, 50, 201):
        lower, diag, upper, rhs, dense = random_dominant_system(rng, n)
        x = thomas_solve(lower, diag, upper, rhs)
        ref = np.linalg.solve(dense, rhs)
        assert np.allclose(x, ref, rtol=1e-12, atol=1e-12)


def test_factor_and_apply_match_direct_solve():
    rng = np.random.default_rng(3)
    for n in (4, 33, 128):
        lower, diag, upper, rhs, dense = random_dominant_system(rng, n)
        cp, inv_beta = thomas_factor(lower, diag, upper)
        out = np.empty(n)
        thomas_apply(lower, cp, inv_beta, rhs, out)
        assert np.allclose(out, np.linalg.solve(dense, rhs), rtol=1e-12, atol=1e-12)


def test_factored_solve_reusable_across_rhs():
    rng = np.random.default_rng(11)
    n = 64
    lower, diag, upper, _, dense = random_dominant_system(rng, n)
    cp, inv_beta = thomas_factor(lower, diag, upper)
    out = np.empty(n)
    for _ in range(5):
        rhs = rng.uniform(-1.0, 1.0, n)
        thomas_apply(lower, cp, inv_beta, rhs, out)
        assert np.allclose(out, np.linalg.solve(dense, rhs), rtol=1e-12, atol=1e-12)


def test_identity_matrix_roundtrip():
    n = 12
    lower = np.zeros(n)
    upper = np.zeros(n)
    diag = np.ones(n)
    rhs = np.arange(float(n))
    assert np.array_equal(thomas_solve(lower, diag, upper, rhs), rhs)
