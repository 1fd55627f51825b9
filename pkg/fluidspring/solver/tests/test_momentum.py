import numpy as np
import pytest

from ...forcing import ForcingSignal
from ...model import (
    FluidParams,
    energy_row,
)
from ...testing import (
    cosine_density,
    make_params,
    make_state,
)
from ..basis import (
    build_basis,
    weighted_gram,
)
from ..continuity import upwind_flux
from ..integrator import Integrator
from ..momentum import (
    assemble,
    boundary_stress,
    convection_matrix,
    epsilon_matrix,
    face_samples,
    momentum_rate,
    newton_residual,
    pressure_force,
    spring_force,
    viscous_matrix,
    wall_density,
)


@pytest.fixture
def params():
    yield FluidParams(
        length=np.pi,
        mu=1.0,
        lam=0.0,
        a=0.0,
        delta=0.0,
        epsilon=0.0,
        k_spring=2.0,
        n_modes=4,
        n_cells=64,
        dt=1e-3,
    )


@pytest.fixture
def basis(params):
    yield build_basis(params.length, params.n_modes, params.n_cells)


@pytest.fixture
def zero_forcing():
    yield ForcingSignal.zero()


class TestFaceSamples:
    def test_shapes(self, basis):
        """Samples cover the augmented family at interior faces."""
        samples = face_samples(basis)
        assert samples.differences.shape == (5, 63)
        assert samples.averages.shape == (5, 63)
        assert samples.psi.shape == (4, 63)

    def test_constant_mode(self, basis):
        """The constant mode has no differences and unit averages."""
        samples = face_samples(basis)
        assert np.all(samples.differences[0] == 0)
        np.testing.assert_allclose(samples.averages[0], 1.0)

    def test_cached(self, basis):
        """Samples are computed once per basis."""
        assert face_samples(basis) is face_samples(basis)


class TestViscousMatrix:
    def test_negative_semidefinite(self, params, basis):
        """The viscous force operator is symmetric and dissipative."""
        matrix = viscous_matrix(params, basis)
        np.testing.assert_allclose(matrix, matrix.T)
        assert np.linalg.eigvalsh(-matrix).max() <= 1e-12

    def test_constant_mode(self, params, basis):
        """The container velocity has no viscous force."""
        matrix = viscous_matrix(params, basis)
        assert np.all(matrix[0] == 0)
        assert np.all(matrix[:, 0] == 0)

    def test_diagonal(self, params, basis):
        """Modes decouple, each with its eigenvalue."""
        matrix = viscous_matrix(params, basis)[1:, 1:]
        np.testing.assert_allclose(
            matrix, 2 * np.diag(basis.eigenvalues), atol=1e-12
        )


class TestConvectionMatrix:
    def test_no_flux(self, basis):
        """Without mass flux there is no convection."""
        matrix = convection_matrix(np.zeros(65), basis)
        assert np.all(matrix == 0)

    def test_constant_row(self, basis):
        """The constant test mode receives no convective force."""
        flux = np.zeros(65)
        flux[1:-1] = np.linspace(-1, 1, 63)
        assert np.all(convection_matrix(flux, basis)[0] == 0)


class TestEpsilonMatrix:
    def test_zero_epsilon(self, params, basis):
        """The operator vanishes without artificial viscosity."""
        rho = cosine_density(params)
        assert np.all(epsilon_matrix(rho, params, basis) == 0)

    def test_uniform_density(self, params, basis):
        """The operator vanishes for a uniform density."""
        params = params.replace(epsilon=0.1)
        np.testing.assert_allclose(
            epsilon_matrix(np.ones(64), params, basis), 0, atol=1e-15
        )


class TestPressureForce:
    def test_uniform_density(self, params, basis):
        """A uniform density exerts no pressure force."""
        params = params.replace(a=1.0, delta=1e-4)
        rho = np.full(64, 2.0)
        _, upwind = upwind_flux(rho, np.zeros(65))
        np.testing.assert_allclose(
            pressure_force(rho, upwind, params, basis), 0, atol=1e-12
        )

    def test_constant_mode(self, params, basis):
        """Pressure acts on the Dirichlet modes only."""
        params = params.replace(a=1.0)
        rho = cosine_density(params)
        _, upwind = upwind_flux(rho, np.zeros(65))
        force = pressure_force(rho, upwind, params, basis)
        assert force[0] == 0
        assert np.any(force[1:] != 0)

    def test_pushes_down_gradient(self, params, basis):
        """Pressure drives the fluid from dense to light regions."""
        params = params.replace(a=1.0)
        # density decreasing along the container
        rho = cosine_density(params, amplitude=0.2)
        _, upwind = upwind_flux(rho, np.zeros(65))
        assert pressure_force(rho, upwind, params, basis)[1] > 0


class TestSpringForce:
    def test_force(self, params):
        """The spring pulls the container to the anchor."""
        forcing = ForcingSignal.sinusoid(0.5, 1.0, np.pi / 2)
        assert spring_force(1.5, 0.0, params, forcing) == pytest.approx(-2.0)


class TestAssemble:
    def test_equilibrium(self, params, basis, zero_forcing):
        """A uniform fluid at rest with a relaxed spring has no forces."""
        params = params.replace(a=1.0, delta=1e-4)
        assembly = assemble(
            np.ones(64), np.zeros(4), 0.0, 0.0, 0.0, params, zero_forcing, basis
        )
        np.testing.assert_allclose(assembly.rhs, 0, atol=1e-12)

    def test_spring(self, params, basis, zero_forcing):
        """A stretched spring only forces the container mode."""
        assembly = assemble(
            np.ones(64), np.zeros(4), 0.0, 1.0, 0.0, params, zero_forcing, basis
        )
        np.testing.assert_allclose(assembly.rhs, [-2.0, 0, 0, 0, 0], atol=1e-14)

    def test_viscous(self, params, basis, zero_forcing):
        """The first mode is damped by the viscous force."""
        v_coeffs = np.array([1.0, 0.0, 0.0, 0.0])
        assembly = assemble(
            np.ones(64), v_coeffs, 0.0, 0.0, 0.0, params, zero_forcing, basis
        )
        assert assembly.rhs[0] == pytest.approx(0, abs=1e-12)
        assert assembly.rhs[1] == pytest.approx(-2.0, rel=1e-12)

    def test_viscous_mode_rate(self, params, basis, zero_forcing):
        """With the container held, the first mode decays at rate -2."""
        v_coeffs = np.array([1.0, 0.0, 0.0, 0.0])
        assembly = assemble(
            np.ones(64), v_coeffs, 0.0, 0.0, 0.0, params, zero_forcing, basis
        )
        block = assembly.mass.matrix[1:, 1:]
        rate = np.linalg.solve(block, assembly.rhs[1:])
        assert rate[0] == pytest.approx(-2.0, rel=1e-12)

    def test_coeffs(self, params, basis, zero_forcing):
        """Forces are evaluated at the augmented coefficients."""
        v_coeffs = np.array([0.1, 0.2, 0.3, 0.4])
        assembly = assemble(
            np.ones(64), v_coeffs, 0.5, 0.0, 0.0, params, zero_forcing, basis
        )
        np.testing.assert_array_equal(assembly.coeffs, [0.5, 0.1, 0.2, 0.3, 0.4])


class TestMomentumRate:
    def test_spring(self, params, basis, zero_forcing):
        """The rate solves the mass system against the forces."""
        rho = np.ones(64)
        assembly = assemble(
            rho, np.zeros(4), 0.0, 1.0, 0.0, params, zero_forcing, basis
        )
        rate = momentum_rate(assembly)
        expected = np.linalg.solve(weighted_gram(rho, basis), assembly.rhs)
        np.testing.assert_allclose(rate, expected, rtol=1e-12, atol=1e-14)
        assert rate[0] < 0

    def test_mass_change(self, params, basis, zero_forcing):
        """The change of the mass operator is accounted for."""
        params = params.replace(epsilon=0.1)
        rho = cosine_density(params, amplitude=0.2)
        v_coeffs = np.zeros(4)
        assembly = assemble(rho, v_coeffs, 1.0, 0.0, 0.0, params, zero_forcing, basis)
        rate = momentum_rate(assembly)
        change = weighted_gram(assembly.rho_rate, basis) @ assembly.coeffs
        expected = np.linalg.solve(assembly.mass.matrix, assembly.rhs - change)
        np.testing.assert_allclose(rate, expected, rtol=1e-10, atol=1e-14)


class TestWallDensity:
    def test_extrapolation(self):
        """Densities are extrapolated with zero slope at the walls."""
        np.testing.assert_allclose(
            wall_density(np.array([1.0, 2.0, 2.0, 1.0])), [7 / 8, 7 / 8]
        )

    def test_fallback(self):
        """The nearest center is used when extrapolation isn't positive."""
        np.testing.assert_allclose(
            wall_density(np.array([0.1, 2.0, 2.0, 3.0])), [0.1, 25 / 8]
        )


class TestBoundaryStress:
    def test_at_rest(self, params, basis):
        """A uniform fluid at rest has balanced walls."""
        params = params.replace(a=1.0)
        stress = boundary_stress(np.full(64, 1.5), np.zeros(4), params, basis)
        assert stress == pytest.approx(0, abs=1e-14)

    def test_first_mode(self, params, basis):
        """The first mode pulls on both walls."""
        v_coeffs = np.array([1.0, 0.0, 0.0, 0.0])
        stress = boundary_stress(np.ones(64), v_coeffs, params, basis)
        assert stress == pytest.approx(-4 * np.sqrt(2 / np.pi), rel=1e-12)

    def test_container_velocity(self, params, basis):
        """The container velocity does not change the dissipation."""
        params = params.replace(a=1.0)
        v_coeffs = np.array([1.0, 0.5, 0.0, 0.0])
        forcing = ForcingSignal.zero()
        states = [make_state(params, v_coeffs=v_coeffs, beta=beta) for beta in (0, 3)]
        rows = [energy_row(state, params, forcing) for state in states]
        assert rows[0].dissipation_visc == rows[1].dissipation_visc


class TestNewtonResidual:
    def test_stretched_spring(self, params, basis, zero_forcing):
        """At rest, the residual is the spring force."""
        residual = newton_residual(
            np.ones(64), np.zeros(4), 1.0, 0.0, params, zero_forcing, basis
        )
        assert residual == pytest.approx(2.0)

    def test_small_grid(self, zero_forcing):
        """The helper parameters give a balanced equilibrium."""
        params = make_params()
        basis = build_basis(params.length, params.n_modes, params.n_cells)
        residual = newton_residual(
            np.ones(params.n_cells),
            np.zeros(params.n_modes),
            0.0,
            0.0,
            params,
            zero_forcing,
            basis,
        )
        assert residual == 0.0

    def test_refinement(self):
        """The residual of a forced run shrinks with the resolution."""
        means = []
        for n_modes, n_cells, dt in ((8, 64, 2e-3), (16, 128, 1e-3), (32, 256, 5e-4)):
            params = FluidParams(n_modes=n_modes, n_cells=n_cells, dt=dt)
            integrator = Integrator(params, ForcingSignal.sinusoid(0.1, 2.0))
            trajectory = integrator.run(make_state(params), 0.5)
            assert trajectory.completed
            means.append(
                np.mean([report.newton_residual for report in trajectory.reports])
            )
        assert means[0] / means[1] >= 1.5
        assert means[1] / means[2] >= 1.5
