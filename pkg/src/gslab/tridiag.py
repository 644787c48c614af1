"""Thomas algorithm for the tridiagonal systems of the implicit diffusion step.

No pivoting: the theta-scheme matrices are strictly diagonally dominant
(diagonal 1 + theta*r*|stencil|, off-diagonals -theta*r), so elimination
is stable and the pivots never vanish. The matrix is constant across
time steps, which is why the elimination coefficients can be factored
once and reused for every right-hand side.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def thomas_solve(lower, diag, upper, rhs):
    """Solve the system with diagonals (lower, diag, upper).

    lower[0] and upper[-1] are ignored. Returns a fresh solution array.
    """
    n = diag.size
    cp = np.empty(n)
    xp = np.empty(n)
    beta = diag[0]
    cp[0] = upper[0] / beta
    xp[0] = rhs[0] / beta
    for i in range(1, n):
        beta = diag[i] - lower[i] * cp[i - 1]
        cp[i] = upper[i] / beta
        xp[i] = (rhs[i] - lower[i] * xp[i - 1]) / beta
    x = np.empty(n)
    x[n - 1] = xp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = xp[i] - cp[i] * x[i + 1]
    return x


@njit(cache=True)
def thomas_factor(lower, diag, upper):
    """Precompute elimination coefficients (cp, inv_beta) for repeated solves."""
    n = diag.size
    cp = np.empty(n)
    inv_beta = np.empty(n)
    beta = diag[0]
    inv_beta[0] = 1.0 / beta
    cp[0] = upper[0] * inv_beta[0]
    for i in range(1, n):
        beta = diag[i] - lower[i] * cp[i - 1]
        inv_beta[i] = 1.0 / beta
        cp[i] = upper[i] * inv_beta[i]
    return cp, inv_beta


@njit(cache=True)
def thomas_apply(lower, cp, inv_beta, rhs, out):
    """Solve with prefactored coefficients; writes the solution into out."""
    n = rhs.size
    out[0] = rhs[0] * inv_beta[0]
    for i in range(1, n):
        out[i] = (rhs[i] - lower[i] * out[i - 1]) * inv_beta[i]
    for i in range(n - 2, -1, -1):
        out[i] = out[i] - cp[i] * out[i + 1]
