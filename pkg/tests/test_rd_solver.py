import numpy as np
import pytest

from mcflow.errors import StepRejected
from mcflow.kinetics import NoReaction, SingleStepConversion
from mcflow.rd_solver import (
    Grid,
    RegularizationParams,
    SpeciesField,
    advection_term,
    apply_species_bcs,
    flux_divergence,
    q_laplacian_term,
    stable_dt,
    step_species,
)


def blob_field(grid, inlet, amplitude=0.15, width=0.02):
    """Smooth positive perturbation moving mass between species 0 and 1."""
    X, Z = grid.cell_centers()
    bump = amplitude * np.exp(-((X - 0.5 * grid.lx) ** 2 + (Z - 0.5 * grid.lz) ** 2) / width)
    Y = np.tile(inlet[:, None, None], (1, grid.nx, grid.nz)).astype(float)
    Y[0] += bump
    Y[1] -= bump
    assert Y.min() > 0
    return SpeciesField(Y, inlet)


def hand_laplacian(field2d, dx, dz):
    """Reference 5-point Laplacian with mirror (zero-flux) ghosts."""
    p = np.pad(field2d, 1, mode="edge")
    return (p[2:, 1:-1] - 2 * p[1:-1, 1:-1] + p[:-2, 1:-1]) / dx**2 + (
        p[1:-1, 2:] - 2 * p[1:-1, 1:-1] + p[1:-1, :-2]
    ) / dz**2


class TestBoundaryGhosts:
    def test_inlet_face_value_is_inlet_composition(self, rng):
        grid = Grid(8, 6)
        inlet = np.array([0.5, 0.3, 0.2])
        Y = rng.dirichlet(np.ones(3), size=(8, 6)).transpose(2, 0, 1)
        field = SpeciesField(Y, inlet)
        padded = apply_species_bcs(grid, field, "channel")
        face = 0.5 * (padded[:, 1:-1, 0] + padded[:, 1:-1, 1])
        np.testing.assert_allclose(face, np.broadcast_to(inlet[:, None], face.shape), atol=1e-14)

    def test_zero_flux_ghosts_copy_interior(self, rng):
        grid = Grid(8, 6)
        inlet = np.array([0.5, 0.5])
        Y = rng.uniform(0.2, 0.8, (2, 8, 6))
        field = SpeciesField(Y, inlet)
        padded = apply_species_bcs(grid, field, "closed")
        np.testing.assert_array_equal(padded[:, 0, 1:-1], Y[:, 0, :])
        np.testing.assert_array_equal(padded[:, -1, 1:-1], Y[:, -1, :])
        np.testing.assert_array_equal(padded[:, 1:-1, 0], Y[:, :, 0])
        np.testing.assert_array_equal(padded[:, 1:-1, -1], Y[:, :, -1])


class TestFluxDivergence:
    def test_uniform_field_is_stationary(self, species3):
        grid = Grid(10, 12)
        inlet = np.array([0.5, 0.3, 0.2])
        Y = np.tile(inlet[:, None, None], (1, 10, 12))
        field = SpeciesField(Y, inlet)
        for mode in ("channel", "closed"):
            div = flux_divergence(grid, species3, field, mode)
            assert np.abs(div).max() <= 1e-14

    def test_binary_fick_reduction_matches_laplacian(self, species2_equal, rng):
        grid = Grid(16, 16)
        field = blob_field(grid, np.array([0.5, 0.5]))
        div = flux_divergence(grid, species2_equal, field, "closed")
        lap = hand_laplacian(field.Y[0], grid.dx, grid.dz)
        np.testing.assert_allclose(div[0], -0.5 * lap, atol=1e-12)
        np.testing.assert_allclose(div[1], +0.5 * lap, atol=1e-12)

    def test_species_sum_of_divergences_vanishes(self, species3, rng):
        grid = Grid(12, 9)
        inlet = np.array([0.5, 0.3, 0.2])
        Y = rng.dirichlet(np.ones(3), size=(12, 9)).transpose(2, 0, 1)
        field = SpeciesField(Y, inlet)
        for mode in ("channel", "closed"):
            div = flux_divergence(grid, species3, field, mode)
            assert np.abs(div.sum(axis=0)).max() <= 1e-12


class TestAdvection:
    def test_zero_velocity(self, rng):
        grid = Grid(8, 8)
        field = blob_field(grid, np.array([0.4, 0.6]))
        u = np.zeros((9, 8))
        w = np.zeros((8, 9))
        assert np.abs(advection_term(grid, u, w, field, "closed")).max() == 0.0

    def test_uniform_field(self, rng):
        grid = Grid(8, 8)
        inlet = np.array([0.4, 0.6])
        field = SpeciesField(np.tile(inlet[:, None, None], (1, 8, 8)), inlet)
        u = rng.standard_normal((9, 8))
        w = rng.standard_normal((8, 9))
        assert np.abs(advection_term(grid, u, w, field, "channel")).max() <= 1e-14

    def test_linear_profile_exact_upwind(self):
        grid = Grid(6, 10, 1.0, 1.0)
        _, Z = grid.cell_centers()
        s = 0.37
        Y = np.stack([0.4 + s * Z, 0.6 - s * Z])
        field = SpeciesField(Y, np.array([0.4, 0.6]))
        u = np.zeros((7, 10))
        w = np.ones((6, 11))
        adv = advection_term(grid, u, w, field, "closed")
        # upwind from below is exact for linear data away from the bottom row
        np.testing.assert_allclose(adv[0, :, 1:], s, atol=1e-13)
        np.testing.assert_allclose(adv[1, :, 1:], -s, atol=1e-13)


class TestQLaplacian:
    def test_zero_epsilon(self):
        grid = Grid(8, 8)
        field = blob_field(grid, np.array([0.5, 0.5]))
        out = q_laplacian_term(grid, field, RegularizationParams(epsilon=0.0, q=4.0))
        assert np.abs(out).max() == 0.0

    def test_uniform_field(self):
        grid = Grid(8, 8)
        inlet = np.array([0.4, 0.6])
        field = SpeciesField(np.tile(inlet[:, None, None], (1, 8, 8)), inlet)
        out = q_laplacian_term(grid, field, RegularizationParams(epsilon=1.0, q=3.0))
        assert np.abs(out).max() == 0.0

    def test_quadratic_profile_oracle(self):
        # Y(x) = x^2, q = 3: div(|grad|^(q-2) grad) = d/dx(2x * 2x) = 8x for x > 0;
        # the two-point face scheme reproduces it exactly at interior cells
        grid = Grid(64, 2)
        X, _ = grid.cell_centers()
        Y = np.stack([X**2, np.full_like(X, 0.3)])
        field = SpeciesField(Y, np.array([0.5, 0.5]))
        out = q_laplacian_term(grid, field, RegularizationParams(epsilon=1.0, q=3.0), "closed")
        interior = slice(1, -1)
        np.testing.assert_allclose(out[0, interior, 0], 8.0 * X[interior, 0], atol=1e-12)
        assert np.abs(out[1]).max() <= 1e-14

    def test_rejects_bad_exponent(self):
        with pytest.raises(ValueError):
            RegularizationParams(epsilon=1.0, q=2.0)


class TestStepSpecies:
    def test_uniform_state_is_fixed_point(self, species3):
        grid = Grid(8, 8)
        inlet = np.array([0.5, 0.3, 0.2])
        field = SpeciesField(np.tile(inlet[:, None, None], (1, 8, 8)), inlet)
        u = np.zeros((9, 8))
        w = np.ones((8, 9))
        out = step_species(
            grid, species3, NoReaction(3), field, u, w, None, dt=1e-3, mode="channel"
        )
        np.testing.assert_allclose(out.Y, field.Y, atol=1e-14)

    def test_closed_box_conserves_mass_and_sum(self, species3):
        grid = Grid(16, 16)
        field = blob_field(grid, np.array([0.5, 0.3, 0.2]))
        mass0 = field.Y.sum(axis=(1, 2)) * grid.cell_area
        for _ in range(20):
            field = step_species(
                grid, species3, NoReaction(3), field, None, None, None,
                dt=2e-3, mode="closed",
            )
        mass = field.Y.sum(axis=(1, 2)) * grid.cell_area
        np.testing.assert_allclose(mass, mass0, rtol=1e-9)
        assert np.abs(field.Y.sum(axis=0) - 1.0).max() <= 1e-10
        assert field.Y.min() >= -1e-10

    def test_channel_inlet_keeps_unit_sum(self, species3):
        grid = Grid(12, 12)
        field = blob_field(grid, np.array([0.5, 0.3, 0.2]))
        u = np.zeros((13, 12))
        w = np.ones((12, 13))
        for _ in range(10):
            field = step_species(
                grid, species3, NoReaction(3), field, u, w, None,
                dt=2e-3, mode="channel",
            )
        assert np.abs(field.Y.sum(axis=0) - 1.0).max() <= 1e-10
        assert field.Y.min() >= -1e-10

    def test_reaction_converts_between_species(self, species2_equal):
        grid = Grid(6, 6)
        inlet = np.array([0.9, 0.1])
        field = SpeciesField(np.tile(inlet[:, None, None], (1, 6, 6)), inlet)
        theta = np.ones((6, 6))
        model = SingleStepConversion(prefactor=1.0, activation=1.0)
        out = step_species(
            grid, species2_equal, model, field, None, None, theta, dt=1e-2, mode="closed"
        )
        assert np.all(out.Y[0] < field.Y[0])
        assert np.all(out.Y[1] > field.Y[1])
        assert np.abs(out.Y.sum(axis=0) - 1.0).max() <= 1e-12

    def test_sum_violation_rejected(self, species3):
        grid = Grid(6, 6)
        inlet = np.array([0.5, 0.3, 0.2])
        Y = np.tile(inlet[:, None, None], (1, 6, 6)) * 0.9  # sums to 0.9
        field = SpeciesField(Y, inlet)
        with pytest.raises(StepRejected):
            step_species(
                grid, species3, NoReaction(3), field, None, None, None,
                dt=1e-3, mode="closed",
            )


class TestStableDt:
    def test_advective_bound(self):
        grid = Grid(10, 10)
        model = NoReaction(2)
        u = np.full((11, 10), 2.0)
        w = np.zeros((10, 11))
        dt = stable_dt(grid, model, RegularizationParams(), 1.0, u=u, w=w)
        assert dt == pytest.approx(0.5 * grid.dx / 2.0)

    def test_reaction_bound(self):
        grid = Grid(10, 10)
        model = SingleStepConversion(prefactor=10.0, activation=4.0)
        dt = stable_dt(grid, model, RegularizationParams(), 1.0)
        assert dt == pytest.approx(1.0 / model.lipschitz)

    def test_request_honored_when_smallest(self):
        grid = Grid(10, 10)
        dt = stable_dt(grid, NoReaction(2), RegularizationParams(), 1e-5)
        assert dt == 1e-5
