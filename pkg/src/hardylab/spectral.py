"""Spectral-gap estimation for the diffusion generator of dmu = exp(-V)/Z dx.

The generator is discretized on a uniform grid over [-X, X] with no-flux
endpoints; node weights are w_i = exp(-V(x_i)) and conductances come from
midpoint values of exp(-V).  The substitution v = u sqrt(w) turns the
weighted operator into a plain symmetric tridiagonal matrix whose entries
are assembled from *differences* of V, so they stay well scaled even when
exp(-V) underflows.  Eigenvalues are isolated by Sturm-sequence bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import functionals
from .errors import DomainValidationError, EnergyGuardError

# smallest eigenvalue of the Neumann operator is the constant mode at 0;
# anything larger than this (relative to the gap scale) means a broken setup
_ZERO_MODE_TOL = 1e-8


@dataclass(frozen=True)
class TridiagonalOperator:
    """Symmetrized discrete generator: diagonal, off-diagonal, grid metadata."""

    grid: np.ndarray
    diag: np.ndarray
    offdiag: np.ndarray
    h: float
    weights_log: np.ndarray  # log w_i = -V(x_i)
    truncation_mass: float


def discretize(measure, X=None, N=4000):
    """Neumann finite-volume discretization on [-X, X] with N+1 nodes.

    The discrete Dirichlet form sum c_{i+1/2} (u_{i+1}-u_i)^2 h approximates
    Z int u'^2 dmu, and the weighted l2 norm approximates Z int u^2 dmu.
    """
    if N < 100:
        raise DomainValidationError("discretize requires N >= 100")
    if X is None:
        X = measure.truncation
    grid = np.linspace(-X, X, N + 1)
    h = grid[1] - grid[0]
    V = measure.potential.value(grid)
    Vmid = measure.potential.value(0.5 * (grid[:-1] + grid[1:]))
    # symmetrized entries via exponent differences: T = D^{-1/2} L D^{-1/2}
    off = -np.exp(-Vmid + 0.5 * (V[:-1] + V[1:])) / (h * h)
    diag = np.zeros(N + 1)
    diag[:-1] += np.exp(-Vmid + V[:-1]) / (h * h)
    diag[1:] += np.exp(-Vmid + V[1:]) / (h * h)
    from .errors import NonIntegrableError
    from .measure import cdf, tail  # local import to avoid a cycle

    try:
        mass_out = max(0.0, min(1.0, tail(measure, X) + cdf(measure, -X)))
    except NonIntegrableError:
        mass_out = float("nan")  # synthetic bounded-interval proxies
    return TridiagonalOperator(
        grid=grid, diag=diag, offdiag=off, h=h, weights_log=-V, truncation_mass=mass_out
    )


def dirichlet_form(op, u):
    """sum c_{i+1/2} (u_{i+1} - u_i)^2 h for a node vector u."""
    c = -op.offdiag * np.exp(0.5 * (op.weights_log[:-1] + op.weights_log[1:]))
    du = np.diff(u)
    return float(np.sum(c * du * du) * op.h)


def weighted_inner(op, u, v):
    w = np.exp(op.weights_log)
    return float(np.sum(w * u * v) * op.h)


def apply_generator(op, u):
    """Action of the (negative) generator in the original u coordinates."""
    w_half = np.exp(0.5 * op.weights_log)
    v = u * w_half
    out = op.diag * v
    out[:-1] += op.offdiag * v[1:]
    out[1:] += op.offdiag * v[:-1]
    return out / w_half


def _sturm_count(diag, off_sq, sigma):
    """Number of eigenvalues of the tridiagonal matrix strictly below sigma."""
    count = 0
    d = 1.0
    tiny = 1e-290
    for i in range(len(diag)):
        b2 = off_sq[i - 1] if i > 0 else 0.0
        d = (diag[i] - sigma) - (b2 / d if abs(d) > tiny else b2 / math.copysign(tiny, d))
        if d < 0.0:
            count += 1
    return count


def _kth_eigenvalue(diag, off, k, rel_tol=1e-10):
    """k-th smallest eigenvalue (k = 0, 1, ...) by Sturm bisection."""
    off_sq = off * off
    radius = np.zeros(len(diag))
    radius[:-1] += np.abs(off)
    radius[1:] += np.abs(off)
    lo = float(np.min(diag - radius))
    hi = float(np.max(diag + radius))
    scale = max(abs(lo), abs(hi), 1.0)
    lo -= 1e-12 * scale
    hi += 1e-12 * scale
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _sturm_count(diag, off_sq, mid) >= k + 1:
            hi = mid
        else:
            lo = mid
        if hi - lo <= rel_tol * max(abs(hi), 1e-300):
            break
    return 0.5 * (lo + hi)


def gap_resolution(op):
    """Eigenvalue resolution floor of the double-precision Sturm bisection.

    Eigenvalues below roughly eps * ||T|| cannot be separated from the zero
    mode; gaps at or under this floor mean "no spectral gap at this
    precision" (the Poincare-failure signature).
    """
    norm = float(np.max(np.abs(op.diag)) + 2.0 * np.max(np.abs(op.offdiag)))
    return 64.0 * np.finfo(float).eps * norm


def spectral_gap(op, rel_tol=1e-10):
    """Second-smallest eigenvalue of the symmetrized operator, clamped at 0.

    The smallest eigenvalue must be the zero Neumann mode; it is asserted to
    vanish within 1e-8 of the gap scale.  Values inside the rounding noise of
    the matrix (see ``gap_resolution``) are clamped to be nonnegative.
    """
    lam0 = _kth_eigenvalue(op.diag, op.offdiag, 0, rel_tol)
    lam1 = _kth_eigenvalue(op.diag, op.offdiag, 1, rel_tol)
    if abs(lam0) > _ZERO_MODE_TOL * max(1.0, abs(lam1)):
        raise AssertionError(
            f"Neumann ground mode not at zero: lambda0={lam0:.3e}, lambda1={lam1:.3e}"
        )
    return max(lam1, 0.0)


def rayleigh(measure, f):
    """variance(f) / dirichlet(f): a certified lower bound on the Poincare constant."""
    num = functionals.variance(measure, f)
    den = functionals.energy(measure, f, "dirichlet")
    if den < 1e-14:
        raise EnergyGuardError("rayleigh: dirichlet energy below guard")
    return num / den
