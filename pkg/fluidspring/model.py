"""Model parameters, state and constitutive laws.

The fluid is barotropic with pressure law

.. math:: p(\\rho) = a \\rho^\\gamma + \\delta \\rho^8

where the second term is the artificial pressure. The container moves along a
single axis and the fluid is described in the container frame on the slab
:math:`[0, L]`.

"""

from typing import (
    NamedTuple,
    Optional,
)

import attr
import numpy as np

from .forcing import ForcingSignal
from .solver.basis import (
    Basis,
    build_basis,
)
from .solver.continuity import face_gradient


class InvalidParameters(ValueError):
    """Model parameters violate an invariant.

    :param str name: the name of the offending parameter.
    :param str message: the violated invariant.

    """

    def __init__(self, name, message):
        self.name = name
        super().__init__(f"Invalid parameter {name}: {message}")


class DensityDomainError(ValueError):
    """A constitutive law was evaluated at a negative density."""

    def __init__(self, value):
        super().__init__(f"Density must be non-negative, got {value}")


def _positive(name):
    def check(instance, attribute, value):
        if not value > 0:
            raise InvalidParameters(name, f"must be > 0, got {value}")

    return check


def _non_negative(name):
    def check(instance, attribute, value):
        if not value >= 0:
            raise InvalidParameters(name, f"must be >= 0, got {value}")

    return check


def _at_least(name, minimum):
    def check(instance, attribute, value):
        if value < minimum:
            raise InvalidParameters(name, f"must be >= {minimum}, got {value}")

    return check


@attr.s(frozen=True)
class FluidParams:
    """Physical and approximation constants for a simulation."""

    #: Shear viscosity.
    mu = attr.ib(default=1.0, converter=float, validator=_positive("mu"))
    #: Second viscosity coefficient.
    lam = attr.ib(default=0.0, converter=float)
    #: Pressure coefficient.
    a = attr.ib(default=1.0, converter=float, validator=_non_negative("a"))
    #: Adiabatic exponent.
    gamma = attr.ib(default=2.0, converter=float)
    #: Spring stiffness.
    k_spring = attr.ib(default=1.0, converter=float, validator=_positive("k_spring"))
    #: Artificial viscosity in the continuity equation.
    epsilon = attr.ib(default=1e-3, converter=float, validator=_non_negative("epsilon"))
    #: Artificial pressure coefficient.
    delta = attr.ib(default=1e-4, converter=float, validator=_non_negative("delta"))
    #: Length of the container.
    length = attr.ib(default=1.0, converter=float, validator=_positive("length"))
    #: Dimension of the Galerkin velocity space.
    n_modes = attr.ib(default=16, converter=int, validator=_at_least("n_modes", 1))
    #: Number of density cells.
    n_cells = attr.ib(default=256, converter=int, validator=_at_least("n_cells", 2))
    #: Time step.
    dt = attr.ib(default=1e-4, converter=float, validator=_positive("dt"))
    #: Tolerance for the fixed-point iteration within a step.
    fp_tol = attr.ib(default=1e-10, converter=float, validator=_positive("fp_tol"))
    #: Maximum number of fixed-point iterations within a step.
    fp_max_iter = attr.ib(
        default=50, converter=int, validator=_at_least("fp_max_iter", 1)
    )
    #: Relative tolerance for the per-step energy inequality.
    energy_tol = attr.ib(
        default=1e-8, converter=float, validator=_positive("energy_tol")
    )
    #: How many times a rejected step may halve its time step.
    max_halvings = attr.ib(
        default=10, converter=int, validator=_at_least("max_halvings", 0)
    )

    def __attrs_post_init__(self):
        if not self.lam + 2.0 / 3.0 * self.mu > 0:
            raise InvalidParameters(
                "lam", f"lam + 2/3 mu must be > 0, got {self.lam + 2 / 3 * self.mu}"
            )
        if not self.gamma > 1:
            raise InvalidParameters("gamma", f"must be > 1, got {self.gamma}")

    @property
    def theorem_regime(self) -> bool:
        """Whether the adiabatic exponent is in the existence-theory range."""
        return self.gamma > 1.5

    @property
    def viscous_coefficient(self) -> float:
        """The one-dimensional viscous coefficient :math:`\\lambda + 2\\mu`."""
        return self.lam + 2.0 * self.mu

    @property
    def dx(self) -> float:
        return self.length / self.n_cells

    @property
    def dt_min(self) -> float:
        """The smallest time step a rejected step may retry with."""
        return self.dt / 2**self.max_halvings

    def replace(self, **changes):
        """Return a copy with the specified fields changed."""
        return attr.evolve(self, **changes)


def _frozen_array(value):
    array = np.array(value, dtype=float)
    array.setflags(write=False)
    return array


@attr.s(frozen=True, eq=False)
class FluidState:
    """A time slice of the coupled system.

    Velocities are relative to the container: the fluid velocity is
    :math:`u = v + \\beta` where :math:`v` vanishes on the walls.

    """

    #: Time.
    t = attr.ib(converter=float)
    #: Density at cell centers.
    rho = attr.ib(converter=_frozen_array)
    #: Galerkin coefficients of the relative velocity.
    v_coeffs = attr.ib(converter=_frozen_array)
    #: Container displacement.
    b = attr.ib(converter=float)
    #: Container velocity.
    beta = attr.ib(converter=float)

    @rho.validator
    def _check_rho(self, attribute, value):
        if value.ndim != 1 or value.size < 2:
            raise ValueError("Density must be a 1D array with at least 2 cells")
        if not np.all(value > 0):
            raise ValueError(f"Density must be positive, min is {value.min()}")

    @property
    def coeffs(self) -> np.ndarray:
        """Return the augmented coefficients :math:`(\\beta, c_1, ..., c_n)`."""
        return np.concatenate(([self.beta], self.v_coeffs))

    @classmethod
    def from_coeffs(cls, t, rho, coeffs, b):
        """Build a state from augmented coefficients."""
        return cls(t=t, rho=rho, v_coeffs=coeffs[1:], b=b, beta=coeffs[0])

    def same_as(self, other, rtol=0.0, atol=0.0) -> bool:
        """Whether two states agree within tolerance."""
        return (
            np.isclose(self.t, other.t, rtol=rtol, atol=atol)
            and np.allclose(self.rho, other.rho, rtol=rtol, atol=atol)
            and np.allclose(self.v_coeffs, other.v_coeffs, rtol=rtol, atol=atol)
            and np.isclose(self.b, other.b, rtol=rtol, atol=atol)
            and np.isclose(self.beta, other.beta, rtol=rtol, atol=atol)
        )


class EnergyLedgerRow(NamedTuple):
    """Terms of the energy inequality at one time."""

    t: float
    kinetic: float
    pressure_potential: float
    artificial_potential: float
    spring: float
    dissipation_visc: float
    dissipation_eps: float
    power_in: float
    mass: float
    total_momentum: float

    @property
    def energy(self) -> float:
        """Mechanical energy: kinetic, potentials and spring."""
        return (
            self.kinetic
            + self.pressure_potential
            + self.artificial_potential
            + self.spring
        )

    @property
    def dissipation(self) -> float:
        return self.dissipation_visc + self.dissipation_eps


def _check_density(rho_value):
    rho_value = np.asarray(rho_value, dtype=float)
    if np.any(rho_value < 0):
        raise DensityDomainError(rho_value.min())
    return rho_value


def pressure(rho_value, params: FluidParams):
    """Return the pressure :math:`a\\rho^\\gamma + \\delta\\rho^8`.

    Works on scalars and arrays.

    """
    rho_value = _check_density(rho_value)
    result = params.a * rho_value**params.gamma + params.delta * rho_value**8
    return result if result.ndim else float(result)


def stress_1d(dv_dx, rho_value, params: FluidParams):
    """Return the total stress :math:`(\\lambda + 2\\mu) v' - p(\\rho)`."""
    return params.viscous_coefficient * np.asarray(dv_dx, dtype=float) - pressure(
        rho_value, params
    )


def pressure_potential(rho_value, params: FluidParams):
    """Return :math:`a\\rho^\\gamma/(\\gamma-1)`."""
    rho_value = _check_density(rho_value)
    return params.a / (params.gamma - 1) * rho_value**params.gamma


def artificial_potential(rho_value, params: FluidParams):
    """Return :math:`\\delta\\rho^8/7`."""
    rho_value = _check_density(rho_value)
    return params.delta / 7 * rho_value**8


def potential_derivative(rho_value, params: FluidParams):
    """Return :math:`P'(\\rho)` for the total potential :math:`P`.

    It satisfies :math:`\\rho P''(\\rho) = p'(\\rho)`.

    """
    rho_value = _check_density(rho_value)
    gamma = params.gamma
    return (
        params.a * gamma / (gamma - 1) * rho_value ** (gamma - 1)
        + 8 * params.delta / 7 * rho_value**7
    )


def potential_second_derivative(rho_value, params: FluidParams):
    """Return :math:`P''(\\rho) = a\\gamma\\rho^{\\gamma-2} + 8\\delta\\rho^6`."""
    rho_value = _check_density(rho_value)
    return (
        params.a * params.gamma * rho_value ** (params.gamma - 2)
        + 8 * params.delta * rho_value**6
    )


def face_potential_curvature(rho: np.ndarray, params: FluidParams) -> np.ndarray:
    """Return :math:`P''` at interior faces as a divided difference of P'.

    Where neighbouring densities coincide the point value is used.

    """
    dp = np.diff(potential_derivative(rho, params))
    drho = np.diff(rho)
    point = potential_second_derivative(rho[:-1], params)
    same = np.abs(drho) <= 1e-14 * np.maximum(rho[:-1], rho[1:])
    return np.where(same, point, dp / np.where(same, 1.0, drho))


def epsilon_dissipation(rho: np.ndarray, params: FluidParams, dx: float) -> float:
    """Return :math:`\\varepsilon\\int P''(\\rho)|\\rho_x|^2\\,dx` on the grid."""
    if params.epsilon == 0:
        return 0.0
    gradient = face_gradient(rho, dx)[1:-1]
    curvature = face_potential_curvature(rho, params)
    return float(params.epsilon * np.sum(curvature * gradient**2) * dx)


def energy_row(
    state: FluidState,
    params: FluidParams,
    forcing: ForcingSignal,
    basis: Optional[Basis] = None,
) -> EnergyLedgerRow:
    """Return the energy ledger for a state.

    All integrals use the midpoint rule on the density grid; gradient terms
    use face differences.

    """
    if basis is None:
        basis = build_basis(params.length, params.n_modes, params.n_cells)
    dx = basis.dx
    rho = state.rho
    u = basis.reconstruct(state.v_coeffs) + state.beta
    dv = basis.reconstruct_derivative(state.v_coeffs)
    return EnergyLedgerRow(
        t=state.t,
        kinetic=float(0.5 * np.sum(rho * u**2) * dx),
        pressure_potential=float(np.sum(pressure_potential(rho, params)) * dx),
        artificial_potential=float(np.sum(artificial_potential(rho, params)) * dx),
        spring=0.5 * params.k_spring * state.b**2,
        dissipation_visc=float(params.viscous_coefficient * np.sum(dv**2) * dx),
        dissipation_eps=epsilon_dissipation(rho, params, dx),
        power_in=params.k_spring * state.beta * forcing.value(state.t),
        mass=float(np.sum(rho) * dx),
        total_momentum=float(np.sum(rho * u) * dx),
    )
