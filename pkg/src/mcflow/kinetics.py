"""Reaction-rate models and their structural validation.

Every model splits the net rate of each species into production minus
removal, omega_i = alpha_i - Y_i * beta_i, with alpha_i, beta_i >= 0 on the
physical domain (theta >= 0, Y in the unit cube).  Four structural
assumptions are enforced on every model before it may drive a simulation:

  1. alpha_i >= 0 and beta_i >= 0 on the domain;
  2. the rates sum to zero (mass is only converted, never created);
  3. alpha_i and beta_i are bounded, with a bound the model declares;
  4. the heat release is nonnegative at zero temperature,
     sum_i h_i omega_i(0, Y) <= 0.

Models also declare a Lipschitz constant of omega in (theta, Y); the time
stepper uses 1 / lipschitz as its reaction stability bound.  Outside the
physical domain the rates are evaluated on the clipped arguments
(theta -> max(theta, 0), Y -> clamp to [0, 1]), which keeps them globally
bounded and gives absent species a nonnegative net rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import RateModelInvalid


class RateModel:
    """Base class: subclasses provide alpha / beta and declare bounds.

    Attributes
    ----------
    heats : (N,) nonnegative heats of reaction.
    bound : declared sup of alpha_i, beta_i (and hence |omega_i|) on the domain.
    lipschitz : declared Lipschitz constant of omega in (theta, Y).
    """

    name = "abstract"
    heats: np.ndarray
    bound: float
    lipschitz: float

    @property
    def n_species(self) -> int:
        return self.heats.size

    def alpha(self, theta, Y):
        raise NotImplementedError

    def beta(self, theta, Y):
        raise NotImplementedError


def arrhenius_factor(theta, prefactor: float, activation: float):
    """prefactor * exp(-activation / theta), continued by 0 at theta = 0."""
    theta = np.asarray(theta, dtype=float)
    out = np.zeros_like(theta)
    pos = theta > 0.0
    # -E/theta -> -inf and exp -> 0 as theta -> 0+, the intended continuation
    with np.errstate(over="ignore"):
        np.divide(-activation, theta, out=out, where=pos)
        return np.where(pos, prefactor * np.exp(out, out=out, where=pos), 0.0)


@dataclass(frozen=True)
class NoReaction(RateModel):
    """Inert mixture: omega = 0 identically."""

    n: int = 2
    name = "none"
    heats: np.ndarray = field(init=False)
    bound: float = field(init=False, default=0.0)
    lipschitz: float = field(init=False, default=0.0)

    def __post_init__(self):
        object.__setattr__(self, "heats", np.zeros(self.n))

    def alpha(self, theta, Y):
        return np.zeros_like(np.asarray(Y, dtype=float))

    def beta(self, theta, Y):
        return np.zeros_like(np.asarray(Y, dtype=float))


@dataclass(frozen=True)
class SingleStepConversion(RateModel):
    """Two species, one irreversible step A -> B at an Arrhenius rate.

    omega_A = -Y_A * A0 exp(-E/theta), omega_B = -omega_A.  Only species A
    releases heat (h = (h1, 0)).
    """

    prefactor: float = 1.0
    activation: float = 4.0
    heat: float = 1.0
    name = "single_step"
    heats: np.ndarray = field(init=False)
    bound: float = field(init=False)
    lipschitz: float = field(init=False)

    def __post_init__(self):
        if self.prefactor < 0 or self.activation <= 0 or self.heat < 0:
            raise ValueError("single_step parameters out of range")
        object.__setattr__(self, "heats", np.array([self.heat, 0.0]))
        object.__setattr__(self, "bound", self.prefactor)
        # d/dtheta exp(-E/theta) peaks at theta = E/2 with value 4/(E e^2)
        dtheta = 4.0 / (self.activation * math.e**2)
        object.__setattr__(self, "lipschitz", self.prefactor * max(1.0, dtheta))

    def alpha(self, theta, Y):
        Y = np.asarray(Y, dtype=float)
        rate = Y[..., 0] * arrhenius_factor(theta, self.prefactor, self.activation)
        out = np.zeros_like(Y)
        out[..., 1] = rate
        return out

    def beta(self, theta, Y):
        Y = np.asarray(Y, dtype=float)
        out = np.zeros_like(Y)
        out[..., 0] = arrhenius_factor(theta, self.prefactor, self.activation)
        return out


@dataclass(frozen=True)
class ChainConversion(RateModel):
    """Three species, sequential irreversible steps A -> B -> C."""

    prefactor_1: float = 1.0
    activation_1: float = 4.0
    prefactor_2: float = 1.0
    activation_2: float = 4.0
    heat_1: float = 1.0
    heat_2: float = 0.5
    name = "chain3"
    heats: np.ndarray = field(init=False)
    bound: float = field(init=False)
    lipschitz: float = field(init=False)

    def __post_init__(self):
        if min(self.prefactor_1, self.prefactor_2) < 0:
            raise ValueError("prefactors must be nonnegative")
        if min(self.activation_1, self.activation_2) <= 0:
            raise ValueError("activation constants must be positive")
        if min(self.heat_1, self.heat_2) < 0:
            raise ValueError("heats must be nonnegative")
        object.__setattr__(self, "heats", np.array([self.heat_1, self.heat_2, 0.0]))
        object.__setattr__(self, "bound", max(self.prefactor_1, self.prefactor_2))
        lip = max(
            self.prefactor_1 * max(1.0, 4.0 / (self.activation_1 * math.e**2)),
            self.prefactor_2 * max(1.0, 4.0 / (self.activation_2 * math.e**2)),
        )
        object.__setattr__(self, "lipschitz", 2.0 * lip)

    def alpha(self, theta, Y):
        Y = np.asarray(Y, dtype=float)
        out = np.zeros_like(Y)
        out[..., 1] = Y[..., 0] * arrhenius_factor(theta, self.prefactor_1, self.activation_1)
        out[..., 2] = Y[..., 1] * arrhenius_factor(theta, self.prefactor_2, self.activation_2)
        return out

    def beta(self, theta, Y):
        Y = np.asarray(Y, dtype=float)
        out = np.zeros_like(Y)
        out[..., 0] = arrhenius_factor(theta, self.prefactor_1, self.activation_1)
        out[..., 1] = arrhenius_factor(theta, self.prefactor_2, self.activation_2)
        return out


def rates(model: RateModel, theta, Y) -> np.ndarray:
    """Net rates omega_i = alpha_i - Y_i beta_i on the physical domain."""
    theta = np.asarray(theta, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if np.any(theta < 0):
        raise ValueError("rates requires theta >= 0")
    if np.any(Y < 0) or np.any(Y > 1):
        raise ValueError("rates requires 0 <= Y_i <= 1")
    return model.alpha(theta, Y) - Y * model.beta(theta, Y)


def extended_rates(model: RateModel, theta, Y) -> np.ndarray:
    """Rates extended to all of R^{N+1} by clipping the arguments."""
    theta = np.maximum(np.asarray(theta, dtype=float), 0.0)
    Y = np.clip(np.asarray(Y, dtype=float), 0.0, 1.0)
    return model.alpha(theta, Y) - Y * model.beta(theta, Y)


def heat_release(model: RateModel, theta, Y) -> np.ndarray:
    """Temperature source -sum_i h_i omega_i, using the extended rates."""
    return -extended_rates(model, theta, Y) @ model.heats


def validate_rate_model(
    model: RateModel,
    n_samples: int = 100_000,
    seed: int = 2024,
    tol: float = 1e-12,
) -> None:
    """Check the structural assumptions on random domain samples.

    Raises RateModelInvalid on the first violated assumption.  Samples
    cover theta in [0, 50] plus a heavy tail, Y in the unit cube, and (for
    the global-boundedness check) arbitrary real arguments.
    """
    rng = np.random.default_rng(seed)
    n = model.n_species
    theta = np.concatenate([
        np.zeros(16),
        rng.uniform(0.0, 50.0, n_samples // 2),
        rng.exponential(100.0, n_samples - n_samples // 2 - 16),
    ])
    Y = rng.uniform(0.0, 1.0, (theta.size, n))
    a = model.alpha(theta, Y)
    b = model.beta(theta, Y)
    if np.any(a < 0):
        raise RateModelInvalid(f"{model.name}: production rate alpha is negative on the domain")
    if np.any(b < 0):
        raise RateModelInvalid(f"{model.name}: removal factor beta is negative on the domain")
    omega = a - Y * b
    if np.abs(omega.sum(axis=-1)).max() > tol:
        raise RateModelInvalid(f"{model.name}: rates do not sum to zero")
    if max(a.max(initial=0.0), b.max(initial=0.0)) > model.bound + tol:
        raise RateModelInvalid(f"{model.name}: rates exceed the declared bound")
    omega0 = model.alpha(np.zeros(len(Y)), Y) - Y * model.beta(np.zeros(len(Y)), Y)
    if np.any(omega0 @ model.heats > tol):
        raise RateModelInvalid(f"{model.name}: heat release negative at zero temperature")
    # global boundedness of the clipped extension
    theta_wild = rng.standard_normal(4096) * 1e3
    Y_wild = rng.standard_normal((4096, n)) * 10.0
    ext = extended_rates(model, theta_wild, Y_wild)
    if np.abs(ext).max() > model.bound + tol:
        raise RateModelInvalid(f"{model.name}: extended rates exceed the declared bound")
    if not np.isfinite(model.lipschitz) or model.lipschitz < 0:
        raise RateModelInvalid(f"{model.name}: invalid Lipschitz constant")


_REGISTRY = {
    "none": NoReaction,
    "single_step": SingleStepConversion,
    "chain3": ChainConversion,
}


def build_rate_model(name: str, validate: bool = True, **params) -> RateModel:
    """Instantiate a shipped model by name; validates before returning."""
    try:
        cls = _REGISTRY[name]
    except KeyError:
        raise RateModelInvalid(f"unknown rate model {name!r}") from None
    model = cls(**params)
    if validate:
        validate_rate_model(model, n_samples=20_000)
    return model
