"""Galerkin momentum system coupled with the container oscillator.

The momentum equation is tested against the augmented family
:math:`\\{1, \\psi_1, ..., \\psi_n\\}`. Testing against the Dirichlet modes
gives the fluid momentum balance; testing against the constant gives the
Newton law of the container, where the wall stress is replaced by the spring
force :math:`-k(b - f(t))`.

All force terms are written as matrices acting on the augmented coefficients
:math:`w = (\\beta, c_1, ..., c_n)` so the integrator can treat them
implicitly. Gradient terms are evaluated at interior faces from cell-center
samples, which is what makes the kinetic energy exchange with the continuity
equation cancel exactly.

"""

from functools import lru_cache
from typing import NamedTuple

import numpy as np

from ..forcing import ForcingSignal
from ..model import (
    FluidParams,
    potential_derivative,
    pressure,
)
from .basis import (
    Basis,
    MassOperator,
    assemble_mass,
    weighted_gram,
)
from .continuity import (
    density_rate,
    face_gradient,
    upwind_flux,
)


class FaceSamples(NamedTuple):
    """Augmented family differenced and averaged at interior faces."""

    #: :math:`e_\\alpha(x_{i+1}) - e_\\alpha(x_i)`, shape (n + 1, n_cells - 1).
    differences: np.ndarray
    #: :math:`(e_\\alpha(x_i) + e_\\alpha(x_{i+1}))/2`.
    averages: np.ndarray
    #: :math:`\\psi_j` at interior faces, shape (n, n_cells - 1).
    psi: np.ndarray


@lru_cache(maxsize=16)
def face_samples(basis: Basis) -> FaceSamples:
    samples = basis.augmented_grid
    return FaceSamples(
        differences=np.diff(samples, axis=1),
        averages=0.5 * (samples[:, 1:] + samples[:, :-1]),
        psi=basis.psi_faces[:, 1:-1],
    )


def viscous_matrix(params: FluidParams, basis: Basis) -> np.ndarray:
    """Return :math:`(\\lambda + 2\\mu)\\int e_\\alpha' e_\\beta'`.

    The constant mode has a zero row and column.

    """
    matrix = np.zeros((basis.size, basis.size))
    dpsi = basis.dpsi_grid
    matrix[1:, 1:] = params.viscous_coefficient * (dpsi @ dpsi.T) * basis.dx
    return matrix


def convection_matrix(flux, basis: Basis) -> np.ndarray:
    """Return the convective operator for a frozen face mass flux.

    Row :math:`\\alpha` approximates :math:`\\int \\rho u v e_\\alpha'`.

    """
    samples = face_samples(basis)
    return (samples.differences * flux[1:-1]) @ samples.averages.T


def epsilon_matrix(rho, params: FluidParams, basis: Basis) -> np.ndarray:
    """Return the operator of the term :math:`\\varepsilon \\rho_x u_x`."""
    if params.epsilon == 0:
        return np.zeros((basis.size, basis.size))
    samples = face_samples(basis)
    gradient = face_gradient(rho, basis.dx)[1:-1]
    return params.epsilon * (samples.averages * gradient) @ samples.differences.T


def pressure_force(rho, upwind, params: FluidParams, basis: Basis) -> np.ndarray:
    """Return the pressure force on each mode.

    The gradient form :math:`-\\rho\\, \\partial_x P'(\\rho)` is used, which
    equals :math:`-\\partial_x p(\\rho)`; it acts on the Dirichlet modes only.

    """
    force = np.zeros(basis.size)
    jumps = np.diff(potential_derivative(rho, params))
    force[1:] = -face_samples(basis).psi @ (upwind[1:-1] * jumps)
    return force


def spring_force(b, t, params: FluidParams, forcing: ForcingSignal) -> float:
    return -params.k_spring * (b - forcing.value(t))


class MomentumAssembly(NamedTuple):
    """Mass operator and forces of the momentum system at one state."""

    mass: MassOperator
    rhs: np.ndarray
    #: Augmented coefficients the forces were evaluated at.
    coeffs: np.ndarray
    #: Semi-discrete density rate, giving the change of the mass operator.
    rho_rate: np.ndarray
    basis: Basis


def assemble(
    rho,
    v_coeffs,
    beta,
    b,
    t,
    params: FluidParams,
    forcing: ForcingSignal,
    basis: Basis,
) -> MomentumAssembly:
    """Assemble the momentum system at a state."""
    rho = np.asarray(rho, dtype=float)
    mass = assemble_mass(rho, basis)
    coeffs = np.concatenate(([beta], v_coeffs))
    v_faces = basis.reconstruct_faces(v_coeffs)
    flux, upwind = upwind_flux(rho, v_faces)
    operator = (
        -viscous_matrix(params, basis)
        + convection_matrix(flux, basis)
        - epsilon_matrix(rho, params, basis)
    )
    rhs = operator @ coeffs + pressure_force(rho, upwind, params, basis)
    rhs[0] += spring_force(b, t, params, forcing)
    return MomentumAssembly(
        mass=mass,
        rhs=rhs,
        coeffs=coeffs,
        rho_rate=density_rate(rho, v_faces, params.epsilon, basis.dx),
        basis=basis,
    )


def momentum_rate(assembly: MomentumAssembly) -> np.ndarray:
    """Return the time derivative of the augmented coefficients.

    Solves :math:`\\mathcal{M}_\\rho \\dot w = rhs - \\dot{\\mathcal{M}}_\\rho w`
    where :math:`\\dot{\\mathcal{M}}_\\rho` is the mass operator of the
    density rate. The result is ordered as :math:`(\\dot\\beta, \\dot c_1, ...)`.

    """
    mass_change = weighted_gram(assembly.rho_rate, assembly.basis)
    return assembly.mass.solve(assembly.rhs - mass_change @ assembly.coeffs)


def wall_density(rho) -> np.ndarray:
    """Extrapolate the density to the walls.

    Uses the quadratic through the two nearest centers with zero slope at the
    wall, falling back to the nearest center if that is not positive.

    """
    rho = np.asarray(rho)
    walls = np.array([(9 * rho[0] - rho[1]) / 8, (9 * rho[-1] - rho[-2]) / 8])
    nearest = np.array([rho[0], rho[-1]])
    return np.where(walls > 0, walls, nearest)


def boundary_stress(rho, v_coeffs, params: FluidParams, basis: Basis) -> float:
    """Return the net wall stress :math:`T(L) - T(0)` on the fluid."""
    dv_walls = np.asarray(v_coeffs) @ basis.dpsi_walls
    stress = params.viscous_coefficient * dv_walls - pressure(wall_density(rho), params)
    return float(stress[1] - stress[0])


def newton_residual(rho, v_coeffs, b, t, params, forcing, basis) -> float:
    """Return :math:`|k(b - f) + T(L) - T(0)|`."""
    spring = params.k_spring * (b - forcing.value(t))
    return abs(spring + boundary_stress(rho, v_coeffs, params, basis))
