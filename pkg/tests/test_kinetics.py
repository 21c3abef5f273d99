import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcflow.errors import RateModelInvalid
from mcflow.kinetics import (
    ChainConversion,
    NoReaction,
    RateModel,
    SingleStepConversion,
    build_rate_model,
    extended_rates,
    heat_release,
    rates,
    validate_rate_model,
)


class TestSingleStep:
    def test_hand_value_at_unit_temperature(self):
        model = SingleStepConversion()  # A0=1, E=4
        omega = rates(model, 1.0, np.array([1.0, 0.0]))
        np.testing.assert_allclose(omega, [-math.exp(-4.0), math.exp(-4.0)], rtol=1e-15)

    def test_absent_species_never_removed(self, rng):
        model = SingleStepConversion()
        theta = rng.uniform(0, 10, 100)
        Y = np.stack([np.zeros(100), rng.uniform(0, 1, 100)], axis=-1)
        omega = rates(model, theta, Y)
        assert np.all(omega[:, 0] >= 0.0)

    def test_rates_sum_to_zero(self, rng):
        model = SingleStepConversion(prefactor=3.0, activation=2.0)
        theta = rng.uniform(0, 20, 10_000)
        Y = rng.uniform(0, 1, (10_000, 2))
        omega = rates(model, theta, Y)
        assert np.abs(omega.sum(-1)).max() <= 1e-12

    def test_domain_violation_rejected(self):
        model = SingleStepConversion()
        with pytest.raises(ValueError):
            rates(model, -1.0, np.array([0.5, 0.5]))
        with pytest.raises(ValueError):
            rates(model, 1.0, np.array([1.5, -0.5]))


class TestExtendedRates:
    def test_negative_temperature_clips_to_zero(self):
        model = SingleStepConversion()
        omega = extended_rates(model, -1.0, np.array([0.7, 0.3]))
        # Arrhenius factor vanishes in the zero-temperature limit
        np.testing.assert_array_equal(omega, 0.0)

    def test_overshoot_mass_fraction_clips_to_one(self):
        model = SingleStepConversion()
        a = extended_rates(model, 2.0, np.array([1.7, 0.0]))
        b = extended_rates(model, 2.0, np.array([1.0, 0.0]))
        np.testing.assert_array_equal(a, b)

    def test_identity_on_domain(self, rng):
        model = ChainConversion()
        theta = rng.uniform(0, 5, 500)
        Y = rng.dirichlet(np.ones(3), 500)
        np.testing.assert_array_equal(
            extended_rates(model, theta, Y), rates(model, theta, Y)
        )

    @given(
        theta=st.floats(-1e6, 1e6, allow_nan=False),
        y1=st.floats(-10, 10),
        y2=st.floats(-10, 10),
    )
    @settings(max_examples=300, deadline=None)
    def test_globally_bounded(self, theta, y1, y2):
        model = SingleStepConversion(prefactor=2.0)
        omega = extended_rates(model, theta, np.array([y1, y2]))
        assert np.abs(omega).max() <= model.bound + 1e-12


class TestHeatRelease:
    def test_zero_temperature_source_is_nonnegative(self, rng):
        for model in (SingleStepConversion(), ChainConversion()):
            Y = rng.uniform(0, 1, (1000, model.n_species))
            q = heat_release(model, np.zeros(1000), Y)
            assert q.min() >= 0.0

    def test_equilibrium_state_releases_nothing(self):
        model = SingleStepConversion()
        assert heat_release(model, 5.0, np.array([0.0, 1.0])) == 0.0

    def test_hand_value(self):
        model = SingleStepConversion()  # h = (1, 0)
        q = heat_release(model, 1.0, np.array([1.0, 0.0]))
        assert q == pytest.approx(math.exp(-4.0), rel=1e-15)


class _NegativeAlpha(RateModel):
    """Deliberately broken: production rate can go negative."""

    name = "broken_negative_alpha"

    def __init__(self):
        self.heats = np.array([1.0, 0.0])
        self.bound = 1.0
        self.lipschitz = 1.0

    def alpha(self, theta, Y):
        Y = np.asarray(Y, dtype=float)
        out = np.zeros_like(Y)
        out[..., 0] = Y[..., 1] - 0.5  # negative whenever Y_2 < 1/2
        return out

    def beta(self, theta, Y):
        Y = np.asarray(Y, dtype=float)
        out = np.zeros_like(Y)
        out[..., 1] = np.where(Y[..., 0] > 0, (Y[..., 1] - 0.5) / np.maximum(Y[..., 1], 1e-9), 0.0)
        return out


class TestValidation:
    @pytest.mark.parametrize("model", [NoReaction(3), SingleStepConversion(), ChainConversion()])
    def test_shipped_models_pass(self, model):
        validate_rate_model(model, n_samples=100_000)

    @pytest.mark.parametrize("model", [SingleStepConversion(), ChainConversion()])
    def test_extension_bounded_on_unrestricted_samples(self, model, rng):
        theta = rng.standard_normal(100_000) * 1e4
        Y = rng.standard_normal((100_000, model.n_species)) * 50.0
        omega = extended_rates(model, theta, Y)
        assert np.abs(omega).max() <= model.bound + 1e-12

    def test_negative_alpha_rejected(self):
        with pytest.raises(RateModelInvalid, match="alpha"):
            validate_rate_model(_NegativeAlpha())

    def test_build_validates_at_load(self):
        model = build_rate_model("chain3", prefactor_1=2.0)
        assert model.prefactor_1 == 2.0
        with pytest.raises(RateModelInvalid):
            build_rate_model("does_not_exist")


class TestChain:
    def test_sequential_structure(self):
        model = ChainConversion(prefactor_1=1.0, activation_1=1.0,
                                prefactor_2=1.0, activation_2=1.0)
        omega = rates(model, 1.0, np.array([1.0, 0.0, 0.0]))
        r = math.exp(-1.0)
        np.testing.assert_allclose(omega, [-r, r, 0.0], rtol=1e-14)
        omega = rates(model, 1.0, np.array([0.0, 1.0, 0.0]))
        np.testing.assert_allclose(omega, [0.0, -r, r], rtol=1e-14)

    def test_rates_sum_to_zero(self, rng):
        model = ChainConversion()
        theta = rng.uniform(0, 20, 10_000)
        Y = rng.uniform(0, 1, (10_000, 3))
        omega = rates(model, theta, Y)
        assert np.abs(omega.sum(-1)).max() <= 1e-12
