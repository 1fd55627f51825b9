import numpy as np
import pytest

from ..continuity import (
    CFLViolation,
    DensityGrid,
    NonPositiveDensity,
    StepRejected,
    advance_density,
    cfl_ratio,
    continuity_step,
    density_rate,
    face_gradient,
    grad_rho,
    lipschitz_estimate,
    upwind_flux,
)


def random_velocity(rng, n_cells, scale):
    v_faces = np.zeros(n_cells + 1)
    v_faces[1:-1] = rng.uniform(-scale, scale, size=n_cells - 1)
    return v_faces


class TestFaceGradient:
    def test_gradient(self):
        """Gradients are divided differences, zero on the walls."""
        gradient = face_gradient(np.array([1.0, 2.0, 4.0]), 0.5)
        np.testing.assert_allclose(gradient, [0.0, 2.0, 4.0, 0.0])

    def test_grid(self):
        """Gradients of a density grid use its cell size."""
        grid = DensityGrid([1.0, 1.5], 0.25)
        np.testing.assert_allclose(grad_rho(grid), [0.0, 2.0, 0.0])


class TestDensityGrid:
    def test_mass(self):
        """The mass is the midpoint sum of the density."""
        grid = DensityGrid([1.0, 2.0, 3.0], 0.5)
        assert grid.n_cells == 3
        assert grid.mass == pytest.approx(3.0)


class TestUpwindFlux:
    def test_upwind(self):
        """The upwind density is taken from the side the flow comes from."""
        rho = np.array([1.0, 2.0, 3.0])
        flux, upwind = upwind_flux(rho, np.array([0.0, 1.0, -1.0, 0.0]))
        np.testing.assert_allclose(upwind[1:-1], [1.0, 3.0])
        np.testing.assert_allclose(flux, [0.0, 1.0, -3.0, 0.0])


class TestCFLRatio:
    def test_outflow(self):
        """The ratio is the largest cell outflow over a step."""
        assert cfl_ratio(np.array([0.0, 1.0, 0.0]), 0.25, 0.5) == 0.5

    def test_both_sides(self):
        """Outflow through both faces of a cell adds up."""
        ratio = cfl_ratio(np.array([0.0, -1.0, 2.0, 0.0]), 0.1, 0.1)
        assert ratio == pytest.approx(3.0)


class TestAdvanceDensity:
    def test_cfl_violation(self):
        """Steps violating the CFL condition are rejected."""
        with pytest.raises(CFLViolation) as error:
            advance_density(np.ones(2), np.array([0.0, 3.0, 0.0]), 1.0, 0.0, 1.0)
        assert error.value.ratio == 3.0
        assert isinstance(error.value, StepRejected)

    def test_velocity_on_walls(self):
        """The velocity must vanish on the walls."""
        with pytest.raises(ValueError) as error:
            advance_density(np.ones(2), np.array([0.1, 0.0, 0.0]), 0.1, 0.0, 0.5)
        assert str(error.value) == "Velocity must vanish on the walls"

    def test_velocity_shape(self):
        """Face velocities must match the grid."""
        with pytest.raises(ValueError):
            advance_density(np.ones(3), np.zeros(3), 0.1, 0.0, 0.5)

    def test_non_positive(self):
        """A cell emptied by the transport is reported."""
        with pytest.raises(NonPositiveDensity) as error:
            advance_density(np.ones(2), np.array([0.0, 1.0, 0.0]), 0.5, 0.0, 0.5)
        assert error.value.min_value == 0.0
        assert not isinstance(error.value, StepRejected)

    def test_uniform_at_rest(self):
        """A uniform density at rest is unchanged."""
        update = advance_density(np.full(16, 2.0), np.zeros(17), 0.01, 0.1, 1 / 16)
        np.testing.assert_allclose(update.rho, 2.0, rtol=1e-14)
        assert update.cfl_ratio == 0.0

    def test_mass_conservation(self):
        """The mass is conserved for any admissible velocity."""
        rng = np.random.default_rng(3)
        dx = 1 / 64
        for _ in range(100):
            rho = rng.uniform(0.5, 2.0, size=64)
            v_faces = random_velocity(rng, 64, 1.0)
            update = advance_density(rho, v_faces, 0.005, 0.01, dx)
            assert np.sum(update.rho) == pytest.approx(np.sum(rho), rel=1e-13)

    def test_maximum_principle(self):
        """Without transport, diffusion keeps the density within its range."""
        rng = np.random.default_rng(4)
        for _ in range(100):
            rho = rng.uniform(0.5, 2.0, size=64)
            update = advance_density(rho, np.zeros(65), 0.01, 0.1, 1 / 64)
            assert update.rho.min() >= rho.min() - 1e-14
            assert update.rho.max() <= rho.max() + 1e-14

    def test_positivity(self):
        """Densities stay positive under the CFL condition."""
        rng = np.random.default_rng(5)
        for _ in range(100):
            rho = rng.uniform(0.1, 2.0, size=64)
            v_faces = random_velocity(rng, 64, 1.0)
            update = advance_density(rho, v_faces, 0.007, 1e-3, 1 / 64)
            assert update.rho.min() > 0

    def test_heat_decay(self):
        """A cosine mode decays at the rate of the heat equation."""
        n_cells, epsilon, dt, n_steps = 512, 0.1, 1e-4, 1000
        dx = 1 / n_cells
        centers = (np.arange(n_cells) + 0.5) * dx
        mode = np.cos(np.pi * centers)
        rho = 1 + 0.2 * mode
        v_faces = np.zeros(n_cells + 1)
        for _ in range(n_steps):
            rho = advance_density(rho, v_faces, dt, epsilon, dx).rho
        amplitude = np.sum((rho - 1) * mode) / np.sum(mode**2)
        expected = 0.2 * np.exp(-epsilon * np.pi**2 * n_steps * dt)
        assert amplitude == pytest.approx(expected, rel=1e-4)


class TestContinuityStep:
    def test_step(self):
        """A step returns the updated grid."""
        grid = DensityGrid(np.ones(8), 0.125)
        v_faces = np.zeros(9)
        v_faces[4] = 0.5
        new_grid = continuity_step(grid, v_faces, 0.1, 0.0)
        assert new_grid.dx == 0.125
        assert new_grid.mass == pytest.approx(grid.mass)
        assert new_grid.rho[3] == pytest.approx(1 - 0.1 / 0.125 * 0.5)
        assert new_grid.rho[4] == pytest.approx(1 + 0.1 / 0.125 * 0.5)


class TestDensityRate:
    def test_at_rest(self):
        """A uniform density at rest has no rate."""
        rate = density_rate(np.ones(8), np.zeros(9), 0.1, 0.125)
        np.testing.assert_allclose(rate, 0)

    def test_conservative(self):
        """The rate integrates to zero."""
        rng = np.random.default_rng(6)
        rho = rng.uniform(0.5, 2.0, size=16)
        rate = density_rate(rho, random_velocity(rng, 16, 1.0), 0.1, 1 / 16)
        assert np.sum(rate) == pytest.approx(0, abs=1e-12)


class TestLipschitzEstimate:
    def test_identical_pairs(self):
        """Identical velocities give no estimate."""
        grid = DensityGrid(np.ones(8), 0.125)
        v_faces = np.zeros(9)
        assert lipschitz_estimate(grid, [(v_faces, v_faces)], 0.01, 0.1) == 0.0

    def test_bounded(self):
        """The one-step density map is Lipschitz in the velocity."""
        rng = np.random.default_rng(7)
        grid = DensityGrid(rng.uniform(0.5, 2.0, size=32), 1 / 32)
        pairs = [
            (random_velocity(rng, 32, 1.0), random_velocity(rng, 32, 1.0))
            for _ in range(20)
        ]
        estimate = lipschitz_estimate(grid, pairs, 0.005, 0.01)
        assert 0 < estimate < np.inf
        # each face flux changes by at most max(rho) * |dv|
        assert estimate <= 2 * 2.0 * 0.005 / (1 / 32)
