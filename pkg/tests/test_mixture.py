import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcflow.errors import DegenerateComposition
from mcflow.mixture import (
    SpeciesSet,
    grad_mole_from_mass,
    mass_from_mole,
    mole_fractions,
)

from conftest import random_simplex, zero_sum_gradients


def make_species(masses):
    n = len(masses)
    D = np.ones((n, n))
    np.fill_diagonal(D, 0.0)
    return SpeciesSet(molar_mass=np.array(masses, dtype=float), binary_diffusion=D)


class TestSpeciesSet:
    def test_derived_quantities(self, species3):
        assert species3.n_species == 3
        # d'_ij = kappa / (D_ij M_i M_j)
        assert species3.d_prime[0, 1] == pytest.approx(1.0 / (1.0 * 1.0 * 2.0))
        assert species3.d_prime[0, 2] == pytest.approx(1.0 / (0.7 * 1.0 * 3.0))
        assert species3.d_prime[1, 2] == pytest.approx(1.0 / (1.3 * 2.0 * 3.0))
        off = ~np.eye(3, dtype=bool)
        assert species3.gamma == species3.d_prime[off].min()
        assert species3.mass_ratio == pytest.approx(3.0)

    def test_rejects_nonpositive_mass(self):
        with pytest.raises(ValueError):
            make_species([1.0, -2.0])

    def test_rejects_asymmetric_diffusion(self):
        D = np.array([[0.0, 1.0], [2.0, 0.0]])
        with pytest.raises(ValueError):
            SpeciesSet(molar_mass=np.array([1.0, 1.0]), binary_diffusion=D)

    def test_rejects_nonpositive_offdiagonal(self):
        D = np.array([[0.0, 0.0], [0.0, 0.0]])
        with pytest.raises(ValueError):
            SpeciesSet(molar_mass=np.array([1.0, 1.0]), binary_diffusion=D)


class TestMoleFractions:
    def test_hand_worked_two_species(self):
        # M=(1,2), Y=(0.5,0.5): molar sum 0.75, X=(2/3, 1/3)
        sp = make_species([1.0, 2.0])
        X, ym, xm = mole_fractions(sp, np.array([0.5, 0.5]))
        assert ym == pytest.approx(0.75)
        np.testing.assert_allclose(X, [2.0 / 3.0, 1.0 / 3.0], rtol=1e-15)
        assert ym * xm == pytest.approx(1.0, abs=1e-15)

    def test_single_species_identity(self):
        sp = make_species([1.0, 2.0, 5.0])
        X, _, _ = mole_fractions(sp, np.array([1.0, 0.0, 0.0]))
        np.testing.assert_allclose(X, [1.0, 0.0, 0.0])

    def test_equal_masses_gives_x_equals_y(self, rng):
        sp = make_species([2.5, 2.5, 2.5, 2.5])
        Y = random_simplex(rng, 64, 4)
        X, _, _ = mole_fractions(sp, Y)
        np.testing.assert_allclose(X, Y, atol=1e-15)

    def test_degenerate_composition_raises(self):
        sp = make_species([1.0, 2.0])
        with pytest.raises(DegenerateComposition):
            mole_fractions(sp, np.array([0.0, 0.0]))
        with pytest.raises(DegenerateComposition):
            mole_fractions(sp, np.array([1e-13, 1e-13]))

    def test_round_trip(self, rng):
        sp = make_species([1.0, 2.0, 3.0])
        Y = rng.uniform(0.1, 2.0, size=(256, 3))  # not normalized on purpose
        X, _, _ = mole_fractions(sp, Y)
        back = mass_from_mole(sp, X)
        np.testing.assert_allclose(back, Y / Y.sum(-1, keepdims=True), atol=1e-12)

    def test_molar_aggregate_bounds_on_simplex(self, rng):
        # 1/Mhigh <= Ym <= 1/Mlow and Mlow <= Xm <= Mhigh for simplex samples
        sp = make_species([1.0, 2.0, 3.0])
        Y = random_simplex(rng, 100_000, 3)
        X, ym, xm = mole_fractions(sp, Y)
        assert ym.min() >= 1.0 / 3.0 - 1e-12 and ym.max() <= 1.0 + 1e-12
        assert xm.min() >= 1.0 - 1e-12 and xm.max() <= 3.0 + 1e-12
        np.testing.assert_allclose(ym * xm, 1.0, atol=1e-13)
        np.testing.assert_allclose(X.sum(-1), 1.0, atol=1e-13)


class TestGradients:
    def test_zero_gradient_maps_to_zero(self, species3):
        Y = np.array([0.2, 0.5, 0.3])
        g = grad_mole_from_mass(species3, Y, np.zeros((3, 2)))
        np.testing.assert_array_equal(g, 0.0)

    def test_unit_mass_identity(self, rng):
        # all masses one, sum Y = 1, zero-sum gradients: grad X = grad Y
        sp = make_species([1.0, 1.0, 1.0])
        Y = random_simplex(rng, 32, 3)
        g = zero_sum_gradients(rng, 32, 3)
        gx = grad_mole_from_mass(sp, Y, g)
        np.testing.assert_allclose(gx, g, atol=1e-14)

    def test_two_sided_norm_equivalence(self, rng):
        # |grad X| and |grad Y| are equivalent with constant 2 N Mratio^2
        sp = make_species([1.0, 2.0, 3.0])
        const = 2.0 * 3 * sp.mass_ratio**2
        Y = random_simplex(rng, 20_000, 3)
        g = zero_sum_gradients(rng, 20_000, 3)
        gx = grad_mole_from_mass(sp, Y, g)
        ny = np.sqrt((g**2).sum(axis=(-2, -1)))
        nx = np.sqrt((gx**2).sum(axis=(-2, -1)))
        assert np.all(nx <= const * ny * (1 + 1e-12))
        assert np.all(ny <= const * nx * (1 + 1e-12))

    @given(
        y0=st.floats(0.05, 0.95),
        s=st.floats(-1e3, 1e3),
        m1=st.floats(0.5, 8.0),
        m2=st.floats(0.5, 8.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_gradient_relation_consistent_with_finite_differences(self, y0, s, m1, m2):
        # compare against a centered finite difference of the X(Y) map along
        # an admissible one-parameter path
        sp = make_species([m1, m2])
        direction = np.array([1.0, -1.0]) * s
        Y = np.array([y0, 1.0 - y0])
        eps = 1e-7 / max(abs(s), 1.0)
        Xp, _, _ = mole_fractions(sp, Y + eps * direction)
        Xm, _, _ = mole_fractions(sp, Y - eps * direction)
        fd = (Xp - Xm) / (2 * eps)
        gx = grad_mole_from_mass(sp, Y, direction[:, None])[:, 0]
        np.testing.assert_allclose(gx, fd, rtol=1e-6, atol=1e-8 * max(abs(s), 1.0))
