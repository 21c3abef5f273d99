import numpy as np
import pytest

from mcflow.mixture import SpeciesSet


@pytest.fixture
def species3():
    """Three species with distinct masses and diffusivities."""
    D = np.array([
        [0.0, 1.0, 0.7],
        [1.0, 0.0, 1.3],
        [0.7, 1.3, 0.0],
    ])
    return SpeciesSet(molar_mass=np.array([1.0, 2.0, 3.0]), binary_diffusion=D, kappa=1.0)


@pytest.fixture
def species2_equal():
    """Binary equal-mass mixture with d'_12 = 2 (the Fick reduction case)."""
    D = np.array([[0.0, 0.5], [0.5, 0.0]])
    return SpeciesSet(molar_mass=np.array([1.0, 1.0]), binary_diffusion=D, kappa=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_simplex(rng, n_samples, n_species):
    """Strictly positive compositions summing to one."""
    return rng.dirichlet(np.ones(n_species), size=n_samples)


def zero_sum_gradients(rng, n_samples, n_species, n_dim=2):
    """Random species-major gradients with zero column sum (admissible data)."""
    g = rng.standard_normal((n_samples, n_species, n_dim))
    return g - g.mean(axis=-2, keepdims=True)
