"""Assembly and solution of the Stefan-Maxwell flux systems.

The multicomponent diffusion velocities V_i satisfy a singular linear
system; the solvable reformulation used here augments the singular matrix
B(Y) with a rank-one term to obtain the positive-definite C(Y), and the
flux unknowns F_i = Y_i V_i satisfy an N x N system that stays invertible
whenever the composition is not entirely vacuum.

Species with mass fraction at or below the degeneracy threshold are
"inactive": their rows decouple (the flux is P_i / S_i with S_i a weighted
sum over active species), and the active block is the usual reduced
system.  Implementation-wise the inactive species' mass fractions are
clipped to zero before assembling the flux matrix, which reproduces that
partition exactly because every coupling coefficient carries a factor of
the clipped Y_i.

All routines accept leading batch axes: ``Y`` has shape ``(..., N)``,
driving vectors ``P`` and gradients have shape ``(..., N, n)`` with the
species axis first and the spatial axis last.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DegenerateComposition, NotStrictlyPositive
from .mixture import DELTA, SpeciesSet, grad_mole_from_mass, mole_fractions

# Relative residual above which a linear solve is considered failed.
SOLVE_RTOL = 1e-10


@dataclass(frozen=True)
class SMMatrix:
    """Stefan-Maxwell matrix pair for one composition (or a batch).

    B is the singular symmetric positive-semidefinite matrix of the
    velocity system; C = B + gamma * outer(Y, Y) is positive definite for
    strictly positive compositions.
    """

    B: np.ndarray
    C: np.ndarray
    gamma: float


@dataclass(frozen=True)
class FluxSolve:
    """Result of one flux solve.

    V is only defined when every species is strictly positive (above the
    degeneracy threshold) at every point of the batch; otherwise None.
    """

    F: np.ndarray
    V: np.ndarray | None
    active: np.ndarray


def assemble(species: SpeciesSet, Y: np.ndarray) -> SMMatrix:
    """Build B(Y) and C(Y) = B(Y) + gamma * Y Y^T for a composition batch."""
    Y = np.asarray(Y, dtype=float)
    dp = species.d_prime
    B = -dp * (Y[..., :, None] * Y[..., None, :])
    n = species.n_species
    idx = np.arange(n)
    B[..., idx, idx] = Y * (Y @ dp.T)
    C = B + species.gamma * (Y[..., :, None] * Y[..., None, :])
    return SMMatrix(B=B, C=C, gamma=species.gamma)


def flux_system_matrix(species: SpeciesSet, Y: np.ndarray) -> np.ndarray:
    """Matrix of the invertible flux system, with inactive species clipped.

    Row i:  (sum_{j!=i} d'_ij Yt_j + gamma Yt_i) F_i
            - Yt_i sum_{j!=i} (d'_ij - gamma) F_j  =  P_i,
    where Yt is Y with entries <= DELTA set to zero.  Rows of clipped
    species reduce to S_i F_i = P_i, so solving the full matrix realizes
    the active/inactive partition in one factorization.
    """
    Y = np.asarray(Y, dtype=float)
    if np.any(Y.sum(axis=-1) <= DELTA):
        raise DegenerateComposition("total mass fraction vanishes (sum Y <= delta)")
    Yt = np.where(Y > DELTA, Y, 0.0)
    if np.any(~(Yt > 0).any(axis=-1)):
        raise DegenerateComposition("no species above the degeneracy threshold")
    dp = species.d_prime
    gamma = species.gamma
    A = -Yt[..., :, None] * (dp - gamma)
    n = species.n_species
    idx = np.arange(n)
    A[..., idx, idx] = Yt @ dp.T + gamma * Yt
    return A


def _batched_inv(A: np.ndarray) -> np.ndarray:
    """Inverse of stacked small matrices; closed forms for N = 2 and 3.

    The closed-form paths avoid per-matrix LAPACK dispatch on the grid hot
    path; they agree with the factorization route to roundoff and the
    callers verify residuals where it matters.
    """
    n = A.shape[-1]
    if n == 2:
        det = A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]
        inv = np.empty_like(A)
        inv[..., 0, 0] = A[..., 1, 1]
        inv[..., 0, 1] = -A[..., 0, 1]
        inv[..., 1, 0] = -A[..., 1, 0]
        inv[..., 1, 1] = A[..., 0, 0]
        inv /= det[..., None, None]
        return inv
    if n == 3:
        c00 = A[..., 1, 1] * A[..., 2, 2] - A[..., 1, 2] * A[..., 2, 1]
        c01 = A[..., 1, 2] * A[..., 2, 0] - A[..., 1, 0] * A[..., 2, 2]
        c02 = A[..., 1, 0] * A[..., 2, 1] - A[..., 1, 1] * A[..., 2, 0]
        c10 = A[..., 0, 2] * A[..., 2, 1] - A[..., 0, 1] * A[..., 2, 2]
        c11 = A[..., 0, 0] * A[..., 2, 2] - A[..., 0, 2] * A[..., 2, 0]
        c12 = A[..., 0, 1] * A[..., 2, 0] - A[..., 0, 0] * A[..., 2, 1]
        c20 = A[..., 0, 1] * A[..., 1, 2] - A[..., 0, 2] * A[..., 1, 1]
        c21 = A[..., 0, 2] * A[..., 1, 0] - A[..., 0, 0] * A[..., 1, 2]
        c22 = A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]
        det = A[..., 0, 0] * c00 + A[..., 0, 1] * c01 + A[..., 0, 2] * c02
        inv = np.empty_like(A)
        inv[..., 0, 0] = c00
        inv[..., 0, 1] = c10
        inv[..., 0, 2] = c20
        inv[..., 1, 0] = c01
        inv[..., 1, 1] = c11
        inv[..., 1, 2] = c21
        inv[..., 2, 0] = c02
        inv[..., 2, 1] = c12
        inv[..., 2, 2] = c22
        inv /= det[..., None, None]
        return inv
    return np.linalg.inv(A)


def solve_velocities(species: SpeciesSet, Y: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Diffusion velocities from C(Y) V = P; requires all Y_i > DELTA.

    Single compositions go through a symmetric positive-definite (Cholesky)
    factorization; batches fall back to the stacked LAPACK solver.
    """
    Y = np.asarray(Y, dtype=float)
    P = np.asarray(P, dtype=float)
    if np.any(Y <= DELTA):
        raise NotStrictlyPositive("solve_velocities requires every mass fraction > delta")
    C = assemble(species, Y).C
    if Y.ndim == 1:
        cho = scipy.linalg.cho_factor(C)
        V = scipy.linalg.cho_solve(cho, P)
    else:
        V = np.linalg.solve(C, P)
    _check_residual(C, V, P)
    return V


def _check_residual(A, x, b):
    res = np.abs(np.einsum("...ij,...jd->...id", A, x) - b).max()
    scale = np.abs(b).max()
    if res > SOLVE_RTOL * max(scale, 1e-300):
        raise FloatingPointError(
            f"linear solve residual {res:.3e} exceeds {SOLVE_RTOL:.0e} * {scale:.3e}"
        )


def solve_fluxes(species: SpeciesSet, Y: np.ndarray, P: np.ndarray) -> FluxSolve:
    """Diffusion fluxes for arbitrary driving vectors P (shape (..., N, n)).

    Inactive species (Y_i <= DELTA) receive F_i = P_i / S_i; active species
    solve the reduced coupled block.  Both come out of one pivoted
    factorization of the clipped flux matrix.  sum_i F_i = 0 holds exactly
    when sum_i P_i = 0.
    """
    Y = np.asarray(Y, dtype=float)
    P = np.asarray(P, dtype=float)
    A = flux_system_matrix(species, Y)
    F = np.linalg.solve(A, P)
    _check_residual(A, F, P)
    active = Y > DELTA
    V = F / Y[..., None] if bool(active.all()) else None
    return FluxSolve(F=F, V=V, active=active)


def three_species_fluxes(species: SpeciesSet, Y: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Closed-form fluxes for N = 3 and consistent driving vectors (sum P = 0).

    F_i = -Y_i (w . P) / (rho_t sum Y) + w_i P_i / rho_t,
    with w = (d'_23, d'_13, d'_12) and
    rho_t = d'_13 d'_23 Y_3 + d'_12 d'_13 Y_1 + d'_12 d'_23 Y_2.
    """
    if species.n_species != 3:
        raise ValueError("three_species_fluxes requires exactly three species")
    Y = np.asarray(Y, dtype=float)
    P = np.asarray(P, dtype=float)
    dp = species.d_prime
    d12, d13, d23 = dp[0, 1], dp[0, 2], dp[1, 2]
    rho_t = d13 * d23 * Y[..., 2] + d12 * d13 * Y[..., 0] + d12 * d23 * Y[..., 1]
    if np.any(rho_t <= DELTA * species.gamma**2):
        raise DegenerateComposition("three-species denominator vanishes")
    w = np.array([d23, d13, d12])
    weighted = np.einsum("j,...jd->...d", w, P)
    ysum = Y.sum(axis=-1)
    F = (
        -(Y / (rho_t * ysum)[..., None])[..., None] * weighted[..., None, :]
        + (w / rho_t[..., None])[..., None] * P
    )
    return F


def flux_coefficients(species: SpeciesSet, Y: np.ndarray) -> np.ndarray:
    """Coefficients a_ij such that F_i = -sum_j a_ij grad_Y_j.

    Obtained from the columnwise flux solves with canonical driving vectors
    (one inverse of the clipped flux matrix) followed by the change of
    variables from mole-fraction to mass-fraction gradients:

        a_ij = (f_ij * Ym - s_i) / M_j,   s_i = sum_l f_il Y_l / M_l.

    Column sums of a vanish identically, so total flux is conserved for
    arbitrary gradient data.
    """
    Y = np.asarray(Y, dtype=float)
    A = flux_system_matrix(species, Y)
    f = _batched_inv(A)
    # probe-vector residual guard on the inversion (cheap; full checks in tests)
    probe = np.ones(species.n_species)
    back = np.einsum("...ij,...j->...i", A, np.einsum("...ij,j->...i", f, probe))
    if np.abs(back - probe).max() > SOLVE_RTOL:
        raise FloatingPointError("flux coefficient inversion lost accuracy")
    m = species.molar_mass
    ym = Y @ (1.0 / m)
    s = np.einsum("...il,...l->...i", f, Y / m)
    return (f * ym[..., None, None] - s[..., None]) / m


def generalized_fluxes(species: SpeciesSet, Y: np.ndarray, grad_Y: np.ndarray) -> FluxSolve:
    """Fluxes straight from mass-fraction gradients, F_i = -sum_j a_ij grad_Y_j.

    Defined for any nonnegative composition with nonvanishing total mass;
    coincides with the Stefan-Maxwell solution whenever sum(Y) = 1, and
    the fluxes always sum to zero, even for inconsistent gradient data.
    """
    Y = np.asarray(Y, dtype=float)
    grad_Y = np.asarray(grad_Y, dtype=float)
    a = flux_coefficients(species, Y)
    F = -np.einsum("...ij,...jd->...id", a, grad_Y)
    active = Y > DELTA
    V = F / Y[..., None] if bool(active.all()) else None
    return FluxSolve(F=F, V=V, active=active)


def driving_vectors(species: SpeciesSet, Y: np.ndarray, grad_Y: np.ndarray) -> np.ndarray:
    """Canonical driving vectors P_i = -Ym^2 grad_X_i of the flux system.

    Their sum vanishes identically (the mole fractions always sum to one),
    so the resulting fluxes are conservative.
    """
    ym = np.asarray(Y, dtype=float) @ (1.0 / species.molar_mass)
    grad_X = grad_mole_from_mass(species, Y, grad_Y)
    return -(ym[..., None, None] ** 2) * grad_X


def dissipation_rate(species: SpeciesSet, Y: np.ndarray, grad_Y: np.ndarray) -> np.ndarray:
    """Entropy-dissipation density -sum_i F_i . grad_mu_i over active species.

    grad_mu_i = grad_X_i / (M_i X_i); the sum runs over species with mole
    fraction above the degeneracy threshold.  Nonnegative for admissible
    states (0 <= Y <= 1, sum Y = 1), and bounded below by a positive
    multiple of |grad_Y|^2.
    """
    Y = np.asarray(Y, dtype=float)
    grad_Y = np.asarray(grad_Y, dtype=float)
    if np.any(Y < 0.0) or np.any(Y > 1.0):
        raise ValueError("dissipation_rate requires 0 <= Y_i <= 1")
    if np.any(np.abs(Y.sum(axis=-1) - 1.0) > 1e-8):
        raise ValueError("dissipation_rate requires sum(Y) = 1 to 1e-8")
    X, ym, _ = mole_fractions(species, Y)
    grad_X = grad_mole_from_mass(species, Y, grad_Y)
    P = -(ym[..., None, None] ** 2) * grad_X
    F = solve_fluxes(species, Y, P).F
    mask = X > DELTA
    denom = species.molar_mass * X
    grad_mu = np.divide(
        grad_X,
        denom[..., None],
        out=np.zeros_like(grad_X),
        where=mask[..., None],
    )
    return -np.einsum("...id,...id->...", F, grad_mu * mask[..., None])
