"""Species metadata and the mass-fraction / mole-fraction algebra.

Conventions used throughout the package:

  * ``Y`` denotes mass fractions, shape ``(..., N)`` with the species axis
    last; any number of leading batch axes is allowed (grid points, Monte
    Carlo samples, ...).
  * gradients are stored species-major: ``grad_Y[..., i, d]`` is the
    derivative of species ``i`` along spatial direction ``d``.

The molar sum ``sum_j Y_j / M_j`` (moles per unit mass) and the mean molar
mass ``sum_j M_j X_j`` are exact reciprocals of each other, which several
tests rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DegenerateComposition

# Compositions with sum(Y) at or below this threshold are treated as vacuum.
DELTA = 1e-12


@dataclass(frozen=True)
class SpeciesSet:
    """Immutable description of the chemistry: masses and binary diffusivities.

    Parameters
    ----------
    molar_mass : (N,) array of positive molar masses.
    binary_diffusion : (N, N) symmetric array, strictly positive off the
        diagonal; the diagonal is ignored.
    kappa : thermal diffusion constant (scalar, > 0).
    """

    molar_mass: np.ndarray
    binary_diffusion: np.ndarray
    kappa: float = 1.0

    # derived, filled in __post_init__
    d_prime: np.ndarray = field(init=False, repr=False, compare=False)
    gamma: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        m = np.asarray(self.molar_mass, dtype=float)
        d = np.asarray(self.binary_diffusion, dtype=float)
        if m.ndim != 1 or m.size < 2:
            raise ValueError("need at least two species")
        if np.any(m <= 0) or not np.all(np.isfinite(m)):
            raise ValueError("molar masses must be positive and finite")
        n = m.size
        if d.shape != (n, n):
            raise ValueError(f"binary_diffusion must have shape ({n}, {n})")
        off = ~np.eye(n, dtype=bool)
        if not np.allclose(d, d.T, rtol=0, atol=0):
            raise ValueError("binary_diffusion must be symmetric")
        if np.any(d[off] <= 0) or not np.all(np.isfinite(d[off])):
            raise ValueError("off-diagonal binary diffusion coefficients must be positive")
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        m.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "molar_mass", m)
        object.__setattr__(self, "binary_diffusion", d)
        # mass-scaled inverse diffusivities d'_ij = kappa / (D_ij M_i M_j)
        dp = np.zeros((n, n))
        dp[off] = self.kappa / (d[off] * np.outer(m, m)[off])
        if not np.all(np.isfinite(dp[off])) or np.any(dp[off] <= 0):
            raise ValueError("derived mass-scaled diffusivities must be positive and finite")
        dp.setflags(write=False)
        object.__setattr__(self, "d_prime", dp)
        object.__setattr__(self, "gamma", float(dp[off].min()))

    @property
    def n_species(self) -> int:
        return self.molar_mass.size

    @property
    def mass_low(self) -> float:
        return float(self.molar_mass.min())

    @property
    def mass_high(self) -> float:
        return float(self.molar_mass.max())

    @property
    def mass_ratio(self) -> float:
        """Largest over smallest molar mass."""
        return self.mass_high / self.mass_low

    @property
    def d_prime_max(self) -> float:
        n = self.n_species
        return float(self.d_prime[~np.eye(n, dtype=bool)].max())

    def __hash__(self):
        return hash((self.molar_mass.tobytes(), self.binary_diffusion.tobytes(), self.kappa))

    def __eq__(self, other):
        if not isinstance(other, SpeciesSet):
            return NotImplemented
        return (
            np.array_equal(self.molar_mass, other.molar_mass)
            and np.array_equal(self.binary_diffusion, other.binary_diffusion)
            and self.kappa == other.kappa
        )


class MoleData(NamedTuple):
    """Mole fractions and the two molar aggregates of a composition."""

    mole_fractions: np.ndarray  # X, shape (..., N)
    moles_per_mass: np.ndarray  # sum_j Y_j / M_j, shape (...)
    mean_molar_mass: np.ndarray  # sum_j M_j X_j, shape (...)


def molar_sum(species: SpeciesSet, Y: np.ndarray) -> np.ndarray:
    """Moles per unit mass, sum_j Y_j / M_j.

    Raises DegenerateComposition if any point has sum(Y) <= DELTA.
    """
    Y = np.asarray(Y, dtype=float)
    if np.any(Y.sum(axis=-1) <= DELTA):
        raise DegenerateComposition("total mass fraction vanishes (sum Y <= delta)")
    return Y @ (1.0 / species.molar_mass)


def mole_fractions(species: SpeciesSet, Y: np.ndarray) -> MoleData:
    """Convert mass fractions to mole fractions, X_i = Y_i / (M_i * sum_j Y_j/M_j)."""
    Y = np.asarray(Y, dtype=float)
    ym = molar_sum(species, Y)
    X = Y / (species.molar_mass * ym[..., None])
    xm = X @ species.molar_mass
    return MoleData(X, ym, xm)


def mass_from_mole(species: SpeciesSet, X: np.ndarray) -> np.ndarray:
    """Convert mole fractions back to mass fractions, Y_i = M_i X_i / sum_j M_j X_j."""
    X = np.asarray(X, dtype=float)
    xm = X @ species.molar_mass
    return species.molar_mass * X / xm[..., None]


def grad_mole_from_mass(species: SpeciesSet, Y: np.ndarray, grad_Y: np.ndarray) -> np.ndarray:
    """Mole-fraction gradients from mass-fraction gradients.

    grad_X_i = grad_Y_i / (M_i Ym) - Y_i / (M_i Ym^2) * sum_l grad_Y_l / M_l
    per spatial direction, with Ym the molar sum.

    Parameters
    ----------
    Y : (..., N)
    grad_Y : (..., N, n) species-major gradient stack.
    """
    Y = np.asarray(Y, dtype=float)
    grad_Y = np.asarray(grad_Y, dtype=float)
    ym = molar_sum(species, Y)[..., None, None]
    m = species.molar_mass[:, None]
    grad_ym = (grad_Y / m).sum(axis=-2, keepdims=True)
    return grad_Y / (m * ym) - (Y[..., None] / (m * ym**2)) * grad_ym
