"""Viscous continuity equation with homogeneous Neumann conditions.

Solves :math:`\\partial_t \\rho + \\partial_x(\\rho v) = \\varepsilon
\\partial_{xx}\\rho` on a uniform cell grid, given a relative velocity that
vanishes on the walls. Each step is an explicit upwind transport followed by
a backward-Euler diffusion solve, which keeps the scheme conservative and
monotone under the CFL condition.

"""

from typing import (
    Iterable,
    NamedTuple,
    Tuple,
)

import attr
import numpy as np
from scipy import linalg


class StepRejected(Exception):
    """A step attempt was rejected and may be retried with a smaller dt."""


class CFLViolation(StepRejected):
    """The transport CFL condition does not hold.

    :param float ratio: the CFL ratio of the rejected step.

    """

    def __init__(self, ratio):
        self.ratio = ratio
        super().__init__(f"CFL ratio {ratio:.6g} exceeds 1")


class NonPositiveDensity(Exception):
    """The density update produced a non-positive value."""

    def __init__(self, min_value):
        self.min_value = min_value
        super().__init__(f"Density update is not positive (min {min_value:.6g})")


@attr.s(frozen=True, eq=False)
class DensityGrid:
    """Cell-center density samples."""

    rho = attr.ib(converter=lambda value: np.array(value, dtype=float))
    dx = attr.ib(converter=float)

    @property
    def n_cells(self) -> int:
        return self.rho.size

    @property
    def mass(self) -> float:
        return float(np.sum(self.rho) * self.dx)


class ContinuityUpdate(NamedTuple):
    """Result of a density step, with the quantities the momentum uses."""

    #: Updated density.
    rho: np.ndarray
    #: Upwind mass flux at faces (zero on the walls).
    flux: np.ndarray
    #: Upwind density at faces.
    upwind: np.ndarray
    #: CFL ratio of the step.
    cfl_ratio: float


def face_gradient(rho, dx) -> np.ndarray:
    """Return density gradients at faces, zero on the walls."""
    gradient = np.zeros(len(rho) + 1)
    gradient[1:-1] = np.diff(rho) / dx
    return gradient


def grad_rho(grid: DensityGrid) -> np.ndarray:
    """Return face gradients of a density grid (Neumann walls)."""
    return face_gradient(grid.rho, grid.dx)


def upwind_flux(rho, v_faces) -> Tuple[np.ndarray, np.ndarray]:
    """Return the upwind mass flux and upwind density at faces."""
    rho = np.asarray(rho)
    upwind = np.empty(len(rho) + 1)
    upwind[0], upwind[-1] = rho[0], rho[-1]
    upwind[1:-1] = np.where(v_faces[1:-1] >= 0, rho[:-1], rho[1:])
    flux = v_faces * upwind
    flux[0] = flux[-1] = 0.0
    return flux, upwind


def cfl_ratio(v_faces, dt, dx) -> float:
    """Return the largest fraction of a cell's content leaving it in a step."""
    outflow = np.maximum(v_faces[1:], 0) + np.maximum(-v_faces[:-1], 0)
    return float(outflow.max() * dt / dx)


def _check_velocity(v_faces, n_cells):
    v_faces = np.asarray(v_faces, dtype=float)
    if v_faces.shape != (n_cells + 1,):
        raise ValueError(
            f"Expected {n_cells + 1} face velocities, got {v_faces.shape[0]}"
        )
    if v_faces[0] != 0 or v_faces[-1] != 0:
        raise ValueError("Velocity must vanish on the walls")
    return v_faces


def _diffuse(rho, coefficient):
    """Solve :math:`(I - c \\Delta_h)\\rho' = \\rho` with Neumann walls."""
    n_cells = len(rho)
    bands = np.zeros((3, n_cells))
    bands[0, 1:] = -coefficient
    bands[1, :] = 1 + 2 * coefficient
    bands[1, 0] = bands[1, -1] = 1 + coefficient
    bands[2, :-1] = -coefficient
    return linalg.solve_banded((1, 1), bands, rho)


def advance_density(rho, v_faces, dt, epsilon, dx) -> ContinuityUpdate:
    """Advance the density one step.

    :param rho: density at cell centers.
    :param v_faces: relative velocity at faces, zero on the walls.
    :param float dt: the time step.
    :param float epsilon: the artificial viscosity.
    :param float dx: the cell size.

    """
    rho = np.asarray(rho, dtype=float)
    v_faces = _check_velocity(v_faces, len(rho))
    ratio = cfl_ratio(v_faces, dt, dx)
    if ratio > 1:
        raise CFLViolation(ratio)
    flux, upwind = upwind_flux(rho, v_faces)
    transported = rho - dt / dx * np.diff(flux)
    if epsilon > 0:
        new_rho = _diffuse(transported, epsilon * dt / dx**2)
    else:
        new_rho = transported
    if new_rho.min() <= 0:
        raise NonPositiveDensity(new_rho.min())
    return ContinuityUpdate(new_rho, flux, upwind, ratio)


def continuity_step(grid: DensityGrid, v_faces, dt, epsilon) -> DensityGrid:
    """Return the density grid after one step."""
    update = advance_density(grid.rho, v_faces, dt, epsilon, grid.dx)
    return DensityGrid(update.rho, grid.dx)


def density_rate(rho, v_faces, epsilon, dx) -> np.ndarray:
    """Return the semi-discrete :math:`\\partial_t \\rho`."""
    flux, _ = upwind_flux(rho, v_faces)
    gradient = face_gradient(rho, dx)
    return (-np.diff(flux) + epsilon * np.diff(gradient)) / dx


def lipschitz_estimate(
    grid: DensityGrid,
    velocity_pairs: Iterable[Tuple[np.ndarray, np.ndarray]],
    dt,
    epsilon,
) -> float:
    """Return the largest observed :math:`\\|S(v_1) - S(v_2)\\|_2 /
    \\|v_1 - v_2\\|_\\infty` for the one-step density map S.

    """
    ratios = []
    for v1, v2 in velocity_pairs:
        distance = np.max(np.abs(np.asarray(v1) - np.asarray(v2)))
        if distance == 0:
            continue
        rho1 = continuity_step(grid, v1, dt, epsilon).rho
        rho2 = continuity_step(grid, v2, dt, epsilon).rho
        difference = np.sqrt(np.sum((rho1 - rho2) ** 2) * grid.dx)
        ratios.append(difference / distance)
    return max(ratios, default=0.0)
