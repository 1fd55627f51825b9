import numpy as np
import pytest

from ..basis import (
    BasisConfigurationError,
    MassOperator,
    SingularDensityError,
    assemble_mass,
    build_basis,
    project_dirichlet,
    solve_mass,
    weighted_gram,
)


@pytest.fixture
def basis():
    yield build_basis(1.0, 4, 32)


class TestBuildBasis:
    def test_sizes(self, basis):
        """Sampled arrays have the grid and mode sizes."""
        assert basis.size == 5
        assert basis.dx == pytest.approx(1 / 32)
        assert basis.psi_grid.shape == (4, 32)
        assert basis.dpsi_grid.shape == (4, 32)
        assert basis.psi_faces.shape == (4, 33)
        assert basis.dpsi_walls.shape == (4, 2)
        assert basis.augmented_grid.shape == (5, 32)

    def test_too_few_cells(self):
        """At least four cells per mode are required."""
        with pytest.raises(BasisConfigurationError) as error:
            build_basis(1.0, 8, 31)
        assert "n_cells (31)" in str(error.value)

    def test_no_modes(self):
        """At least one mode is required."""
        with pytest.raises(BasisConfigurationError):
            build_basis(1.0, 0, 32)

    def test_read_only(self, basis):
        """Sampled arrays can't be modified."""
        with pytest.raises(ValueError):
            basis.psi_grid[0, 0] = 1.0

    def test_eigenvalues(self):
        """Eigenvalues are (j pi / L)^2."""
        basis = build_basis(2.0, 3, 16)
        np.testing.assert_allclose(
            basis.eigenvalues, (np.arange(1, 4) * np.pi / 2) ** 2
        )

    def test_walls_zero(self, basis):
        """Modes vanish exactly on the walls."""
        assert np.all(basis.psi_faces[:, 0] == 0)
        assert np.all(basis.psi_faces[:, -1] == 0)

    def test_wall_derivatives(self):
        """Wall derivatives are the analytic ones."""
        basis = build_basis(np.pi, 2, 16)
        norm = np.sqrt(2 / np.pi)
        np.testing.assert_allclose(
            basis.dpsi_walls, [[norm, -norm], [2 * norm, 2 * norm]]
        )

    def test_point_evaluation(self, basis):
        """Point evaluation matches the sampled values."""
        np.testing.assert_allclose(basis.psi(2, basis.centers), basis.psi_grid[1])
        np.testing.assert_allclose(basis.dpsi(3, basis.centers), basis.dpsi_grid[2])


class TestBasisGrid:
    def test_orthonormal(self, basis):
        """Dirichlet modes are orthonormal for the midpoint quadrature."""
        gram = basis.gram()
        np.testing.assert_allclose(gram[1:, 1:], np.eye(4), atol=1e-13)
        assert gram[0, 0] == pytest.approx(1.0)

    def test_constant_coupling(self):
        """The constant mode couples with odd modes only."""
        basis = build_basis(1.0, 4, 64)
        coupling = basis.gram()[0, 1:]
        assert coupling[1] == pytest.approx(0, abs=1e-14)
        assert coupling[3] == pytest.approx(0, abs=1e-14)
        expected = np.sqrt(2) * 2 / (np.arange(1, 5) * np.pi)
        assert coupling[0] == pytest.approx(expected[0], rel=2e-3)
        assert coupling[2] == pytest.approx(expected[2], rel=2e-3)

    def test_project_reconstruct(self, basis):
        """Projecting a reconstructed velocity gives back its coefficients."""
        coeffs = np.array([0.5, -0.2, 0.1, 0.05])
        np.testing.assert_allclose(
            basis.project(basis.reconstruct(coeffs)), coeffs, atol=1e-14
        )

    def test_reconstruct_faces_walls(self, basis):
        """Face velocities vanish exactly on the walls."""
        values = basis.reconstruct_faces(np.array([1.0, 2.0, 3.0, 4.0]))
        assert values[0] == 0.0
        assert values[-1] == 0.0

    def test_reconstruct_augmented(self, basis):
        """The constant mode adds the container velocity."""
        coeffs = np.array([0.3, 1.0, 0.0, 0.0, 0.0])
        np.testing.assert_allclose(
            basis.reconstruct_augmented(coeffs), 0.3 + basis.psi_grid[0]
        )


class TestWeightedGram:
    def test_linear(self, basis):
        """The weighted Gram matrix is linear in the weights."""
        rng = np.random.default_rng(1)
        first, second = rng.normal(size=(2, 32))
        np.testing.assert_allclose(
            weighted_gram(2 * first - second, basis),
            2 * weighted_gram(first, basis) - weighted_gram(second, basis),
            atol=1e-14,
        )

    def test_symmetric(self, basis):
        """The weighted Gram matrix is symmetric."""
        weights = np.linspace(0.5, 2.0, 32)
        matrix = weighted_gram(weights, basis)
        np.testing.assert_allclose(matrix, matrix.T)


class TestMassOperator:
    def test_bounds(self, basis):
        """The smallest eigenvalue is bounded below by the density minimum."""
        rng = np.random.default_rng(0)
        gram_min = np.linalg.eigvalsh(basis.gram())[0]
        for _ in range(1000):
            rho = rng.uniform(0.5, 2.0, size=32)
            mass = assemble_mass(rho, basis)
            eigenvalues = np.linalg.eigvalsh(mass.matrix)
            assert eigenvalues[0] >= rho.min() * gram_min * (1 - 1e-12)
            assert eigenvalues[-1] <= rho.max() * np.linalg.eigvalsh(
                basis.gram()
            )[-1] * (1 + 1e-12)

    def test_resolvent_identity(self, basis):
        """Inverses of two mass operators satisfy the resolvent identity."""
        rng = np.random.default_rng(2)
        first = assemble_mass(rng.uniform(0.5, 2.0, size=32), basis)
        second = assemble_mass(rng.uniform(0.5, 2.0, size=32), basis)
        left = first.inverse() - second.inverse()
        right = first.inverse() @ (second.matrix - first.matrix) @ second.inverse()
        np.testing.assert_allclose(left, right, rtol=1e-10, atol=1e-12)

    def test_solve(self, basis):
        """Solving gives the dense solution."""
        mass = assemble_mass(np.linspace(0.5, 1.5, 32), basis)
        rhs = np.arange(5.0)
        np.testing.assert_allclose(
            solve_mass(mass, rhs), np.linalg.solve(mass.matrix, rhs)
        )

    def test_uniform_density(self, basis):
        """For a uniform density the operator scales the Gram matrix."""
        mass = assemble_mass(np.full(32, 3.0), basis)
        np.testing.assert_allclose(mass.matrix, 3 * basis.gram())

    def test_non_positive_density(self, basis):
        """A non-positive density is rejected."""
        rho = np.ones(32)
        rho[4] = 0.0
        with pytest.raises(SingularDensityError) as error:
            assemble_mass(rho, basis)
        assert "minimum density is 0.0" in str(error.value)

    def test_not_positive_definite(self):
        """Matrices that are not positive definite are rejected."""
        with pytest.raises(SingularDensityError):
            MassOperator.from_matrix([[1.0, 2.0], [2.0, 1.0]])


class TestProjectDirichlet:
    def test_drops_constant_mode(self):
        """The constant-mode component is zeroed."""
        projected = project_dirichlet([1.0, 2.0, 3.0])
        np.testing.assert_array_equal(projected, [0.0, 2.0, 3.0])

    def test_idempotent(self):
        """Projecting twice is the same as once."""
        coeffs = np.array([0.4, -1.0, 0.5])
        once = project_dirichlet(coeffs)
        np.testing.assert_array_equal(project_dirichlet(once), once)

    def test_copy(self):
        """The input is not modified."""
        coeffs = np.array([0.4, -1.0])
        project_dirichlet(coeffs)
        assert coeffs[0] == 0.4
