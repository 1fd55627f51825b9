"""Laplace-Dirichlet eigenbasis and the density-weighted mass operator.

Velocities relative to the container live in the span of

.. math:: \\psi_j(x) = \\sqrt{2/L} \\sin(j \\pi x / L), \\quad j = 1..n

which vanish on the walls. The container velocity is carried by an extra
constant mode :math:`e_0 = 1`, so the augmented family is
:math:`\\{1, \\psi_1, ..., \\psi_n\\}`.

"""

import attr
import numpy as np
from scipy import linalg


class BasisConfigurationError(ValueError):
    """The basis cannot be built with the requested sizes."""

    def __init__(self, message):
        super().__init__(f"Invalid basis configuration: {message}")


class SingularDensityError(ValueError):
    """The mass operator is singular for the given density."""

    def __init__(self, message):
        super().__init__(f"Singular density: {message}")


@attr.s(frozen=True, eq=False)
class Basis:
    """Sampled Dirichlet eigenbasis on a uniform cell grid.

    Use :func:`build_basis` to create instances.

    """

    length = attr.ib()
    n_modes = attr.ib()
    n_cells = attr.ib()
    #: Eigenvalues :math:`(j\\pi/L)^2`.
    eigenvalues = attr.ib(repr=False)
    #: Cell centers.
    centers = attr.ib(repr=False)
    #: Cell faces, including the walls.
    faces = attr.ib(repr=False)
    #: :math:`\\psi_j` at cell centers, shape (n_modes, n_cells).
    psi_grid = attr.ib(repr=False)
    #: :math:`\\psi_j'` at cell centers.
    dpsi_grid = attr.ib(repr=False)
    #: :math:`\\psi_j` at faces, shape (n_modes, n_cells + 1).
    psi_faces = attr.ib(repr=False)
    #: :math:`\\psi_j'` at the two walls, shape (n_modes, 2).
    dpsi_walls = attr.ib(repr=False)
    #: Augmented family :math:`(1, \\psi_1, ...)` at centers.
    augmented_grid = attr.ib(repr=False)

    @property
    def dx(self) -> float:
        return self.length / self.n_cells

    @property
    def size(self) -> int:
        """Dimension of the augmented space."""
        return self.n_modes + 1

    def psi(self, j, x):
        """Evaluate :math:`\\psi_j` at arbitrary points."""
        wavenumber = j * np.pi / self.length
        return np.sqrt(2 / self.length) * np.sin(wavenumber * np.asarray(x))

    def dpsi(self, j, x):
        """Evaluate :math:`\\psi_j'` at arbitrary points."""
        wavenumber = j * np.pi / self.length
        return (
            np.sqrt(2 / self.length)
            * wavenumber
            * np.cos(wavenumber * np.asarray(x))
        )

    def reconstruct(self, v_coeffs) -> np.ndarray:
        """Return the velocity at cell centers from Galerkin coefficients."""
        return np.asarray(v_coeffs) @ self.psi_grid

    def reconstruct_derivative(self, v_coeffs) -> np.ndarray:
        """Return the velocity derivative at cell centers."""
        return np.asarray(v_coeffs) @ self.dpsi_grid

    def reconstruct_faces(self, v_coeffs) -> np.ndarray:
        """Return the velocity at faces; it is exactly zero on the walls."""
        values = np.asarray(v_coeffs) @ self.psi_faces
        values[0] = values[-1] = 0.0
        return values

    def reconstruct_augmented(self, coeffs) -> np.ndarray:
        """Return :math:`u = \\beta + v` at cell centers."""
        return np.asarray(coeffs) @ self.augmented_grid

    def project(self, values) -> np.ndarray:
        """Return Galerkin coefficients of grid values (midpoint quadrature)."""
        return self.psi_grid @ np.asarray(values) * self.dx

    def gram(self) -> np.ndarray:
        """Return the constant-density Gram matrix of the augmented family."""
        return weighted_gram(np.ones(self.n_cells), self)


def build_basis(length, n_modes, n_cells) -> Basis:
    """Build the sampled eigenbasis.

    :param float length: the container length.
    :param int n_modes: the number of Dirichlet modes.
    :param int n_cells: the number of density cells; it must be at least
        four times the number of modes.

    """
    if n_modes < 1:
        raise BasisConfigurationError(f"n_modes must be >= 1, got {n_modes}")
    if n_cells < 4 * n_modes:
        raise BasisConfigurationError(
            f"n_cells ({n_cells}) must be at least 4 * n_modes ({4 * n_modes})"
        )
    dx = length / n_cells
    centers = (np.arange(n_cells) + 0.5) * dx
    faces = np.arange(n_cells + 1) * dx
    modes = np.arange(1, n_modes + 1)[:, None]
    wavenumbers = modes * np.pi / length
    norm = np.sqrt(2 / length)
    psi_grid = norm * np.sin(wavenumbers * centers)
    psi_faces = norm * np.sin(wavenumbers * faces)
    psi_faces[:, 0] = psi_faces[:, -1] = 0.0
    walls = np.array([0.0, length])
    arrays = {
        "eigenvalues": wavenumbers[:, 0] ** 2,
        "centers": centers,
        "faces": faces,
        "psi_grid": psi_grid,
        "dpsi_grid": norm * wavenumbers * np.cos(wavenumbers * centers),
        "psi_faces": psi_faces,
        "dpsi_walls": norm * wavenumbers * np.cos(wavenumbers * walls),
        "augmented_grid": np.vstack((np.ones(n_cells), psi_grid)),
    }
    for array in arrays.values():
        array.setflags(write=False)
    return Basis(length=float(length), n_modes=n_modes, n_cells=n_cells, **arrays)


def weighted_gram(weights, basis: Basis) -> np.ndarray:
    """Return :math:`\\int w\\, e_\\alpha e_\\beta` for arbitrary grid weights.

    The result is linear in the weights; no sign condition is imposed.

    """
    samples = basis.augmented_grid
    return (samples * (np.asarray(weights) * basis.dx)) @ samples.T


@attr.s(frozen=True, eq=False)
class MassOperator:
    """Density-weighted Gram matrix with its Cholesky factorization."""

    matrix = attr.ib(repr=False)
    _factor = attr.ib(repr=False)

    @classmethod
    def from_matrix(cls, matrix):
        """Factorize a symmetric positive-definite matrix."""
        matrix = np.array(matrix, dtype=float)
        try:
            factor = linalg.cho_factor(matrix)
        except linalg.LinAlgError as error:
            raise SingularDensityError(f"factorization failed ({error})")
        return cls(matrix, factor)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def solve(self, rhs) -> np.ndarray:
        return linalg.cho_solve(self._factor, np.asarray(rhs, dtype=float))

    def inverse(self) -> np.ndarray:
        return self.solve(np.eye(self.size))


def assemble_mass(rho, basis: Basis) -> MassOperator:
    """Return the mass operator :math:`\\int \\rho\\, e_\\alpha e_\\beta`."""
    rho = np.asarray(rho, dtype=float)
    if rho.min() <= 0:
        raise SingularDensityError(f"minimum density is {rho.min()}")
    return MassOperator.from_matrix(weighted_gram(rho, basis))


def solve_mass(mass: MassOperator, rhs) -> np.ndarray:
    """Return :math:`\\mathcal{M}^{-1} \\cdot rhs`."""
    return mass.solve(rhs)


def project_dirichlet(coeffs) -> np.ndarray:
    """Project augmented coefficients on the Dirichlet modes.

    The constant-mode component is dropped; the result keeps the augmented
    layout, so the projection is idempotent.

    """
    projected = np.array(coeffs, dtype=float)
    projected[0] = 0.0
    return projected
