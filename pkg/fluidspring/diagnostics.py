"""Post-run verification of trajectories.

Trajectories are checked against the weak form of the equations, the energy
inequality, the momentum balance of the container and renormalized forms of
the continuity equation. All checks read saved records only, and expect
trajectories saved at every step.

Time integrals use the same right-endpoint rule as the time stepper, and the
time-derivative terms are summed by parts against the left state, so an exact
discrete solution gives residuals at roundoff level.

"""

from typing import (
    Callable,
    List,
    NamedTuple,
    Optional,
)

import attr
import numpy as np

from .model import stress_1d
from .solver.basis import (
    Basis,
    build_basis,
)
from .solver.continuity import (
    face_gradient,
    upwind_flux,
)
from .solver.integrator import Trajectory


class SupportMismatch(ValueError):
    """A test function is not supported within the trajectory."""

    def __init__(self, message):
        super().__init__(f"Test function support mismatch: {message}")


TEST_FUNCTION_KINDS = ("interior", "constant")


@attr.s(frozen=True)
class WeakTestFunction:
    """Separable test function :math:`\\varphi(t, x) = \\theta(t)\\chi(x)`.

    :math:`\\theta(t) = (1 - (t/T)^2)^3` on :math:`[0, T]` and zero after.
    The interior profile is :math:`\\chi(x) = 64 (x(L - x))^3 / L^6`, which
    vanishes with two derivatives on the walls; the constant profile
    :math:`\\chi = 1` tests the balance of the whole fluid, where the spring
    force enters.

    """

    kind = attr.ib(validator=attr.validators.in_(TEST_FUNCTION_KINDS))
    horizon = attr.ib(converter=float)
    length = attr.ib(converter=float)

    @classmethod
    def interior(cls, horizon, length):
        return cls("interior", horizon, length)

    @classmethod
    def constant(cls, horizon, length):
        return cls("constant", horizon, length)

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    def theta(self, t):
        s = np.clip(np.asarray(t, dtype=float) / self.horizon, 0.0, 1.0)
        return (1 - s**2) ** 3

    def dtheta(self, t):
        s = np.clip(np.asarray(t, dtype=float) / self.horizon, 0.0, 1.0)
        return -6 * s / self.horizon * (1 - s**2) ** 2

    def chi(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_constant:
            return np.ones_like(x)
        return 64 * (x * (self.length - x)) ** 3 / self.length**6

    def dchi(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_constant:
            return np.zeros_like(x)
        length = self.length
        return (
            192 * (x * (length - x)) ** 2 * (length - 2 * x) / length**6
        )


class ResidualReport(NamedTuple):
    """Weak-form residuals of a trajectory for one test function."""

    continuity: float
    momentum: float
    dt: float
    dx: float
    n_modes: int


class ConvergenceOrder(NamedTuple):
    continuity: float
    momentum: float


class EnergyAudit(NamedTuple):
    """Energy inequality checked step by step over a trajectory."""

    #: Signed per-step defects, non-positive when the inequality holds.
    defects: np.ndarray
    #: :math:`E(T) - E(0) + \\int D - \\int W`.
    cumulative: float
    #: Number of steps whose defect exceeds the tolerance.
    violations: int

    @property
    def max_defect(self) -> float:
        return float(self.defects.max()) if self.defects.size else 0.0

    @property
    def passed(self) -> bool:
        return self.violations == 0


class RenormalizedSeries(NamedTuple):
    """Time series of :math:`\\int b(\\rho)` and of its balance defect."""

    t: np.ndarray
    values: np.ndarray
    defects: np.ndarray


class Renormalization(NamedTuple):
    """A renormalizing function b with the terms of its balance law."""

    value: Callable
    #: :math:`\\rho b'(\\rho) - b(\\rho)`.
    pressure_like: Callable
    derivative: Callable


RENORMALIZATIONS = {
    "entropy": Renormalization(
        value=lambda rho: rho * np.log(rho),
        pressure_like=lambda rho: rho,
        derivative=lambda rho: 1 + np.log(rho),
    ),
    "square": Renormalization(
        value=lambda rho: rho**2,
        pressure_like=lambda rho: rho**2,
        derivative=lambda rho: 2 * rho,
    ),
}


class _Slice(NamedTuple):
    t: float
    rho: np.ndarray
    u: np.ndarray
    v: np.ndarray
    v_faces: np.ndarray
    dv: np.ndarray
    gradient: np.ndarray
    b: float
    beta: float


def _slices(trajectory: Trajectory, basis: Basis) -> List[_Slice]:
    slices = []
    for state in trajectory.states:
        v = basis.reconstruct(state.v_coeffs)
        slices.append(
            _Slice(
                t=state.t,
                rho=state.rho,
                u=v + state.beta,
                v=v,
                v_faces=basis.reconstruct_faces(state.v_coeffs),
                dv=basis.reconstruct_derivative(state.v_coeffs),
                gradient=face_gradient(state.rho, basis.dx)[1:-1],
                b=state.b,
                beta=state.beta,
            )
        )
    return slices


def _basis(trajectory: Trajectory) -> Basis:
    params = trajectory.params
    return build_basis(params.length, params.n_modes, params.n_cells)


def _check_support(trajectory: Trajectory, phi: WeakTestFunction):
    if len(trajectory.records) < 2:
        raise SupportMismatch("trajectory has no steps")
    if not np.isclose(phi.length, trajectory.params.length):
        raise SupportMismatch(
            f"test function length {phi.length} differs from the container "
            f"length {trajectory.params.length}"
        )
    times = trajectory.times
    span = times[-1] - times[0]
    if phi.horizon > span * (1 + 1e-12):
        raise SupportMismatch(
            f"time support {phi.horizon} exceeds the trajectory span {span}"
        )


def _time_weights(times, phi):
    """Return left-state weights for time derivatives and step weights."""
    theta = phi.theta(times - times[0])
    return np.diff(theta), np.diff(times) * theta[1:], theta[0]


def weak_continuity_residual(trajectory: Trajectory, phi: WeakTestFunction) -> float:
    """Return the residual of the weak continuity equation.

    .. math:: \\int\\int \\rho \\varphi_t + \\rho v \\varphi_x
       - \\varepsilon \\rho_x \\varphi_x + \\int \\rho_0 \\varphi(0)

    The mass flux :math:`\\rho v` of each step is the upwind face flux of the
    density update: the density at the step start carried by the velocity at
    its end.

    """
    _check_support(trajectory, phi)
    basis = _basis(trajectory)
    epsilon = trajectory.params.epsilon
    dx = basis.dx
    chi = phi.chi(basis.centers)
    dchi_faces = phi.dchi(basis.faces[1:-1])
    jumps, weights, theta0 = _time_weights(trajectory.times, phi)
    slices = _slices(trajectory, basis)

    masses = np.array([np.sum(item.rho * chi) * dx for item in slices])
    fluxes = []
    for previous, item in zip(slices, slices[1:]):
        mass_flux, _ = upwind_flux(previous.rho, item.v_faces)
        fluxes.append(
            np.sum((mass_flux[1:-1] - epsilon * item.gradient) * dchi_faces) * dx
        )
    return float(
        masses[:-1] @ jumps + weights @ np.array(fluxes) + theta0 * masses[0]
    )


def weak_momentum_residual(
    trajectory: Trajectory, phi: WeakTestFunction, spring_sign: float = -1.0
) -> float:
    """Return the residual of the weak momentum equation.

    .. math:: \\int\\int \\rho u \\varphi_t + \\rho u v \\varphi_x
       - T \\varphi_x - \\varepsilon \\rho_x u_x \\varphi
       + s \\int \\varphi|_{\\partial\\Omega} k(b - f) + \\int (\\rho u)_0
       \\varphi(0)

    The spring term only contributes for constant test functions. Its sign
    ``s`` is -1 for a spring force of :math:`-k(b - f)` on the fluid; passing
    0 drops the term.

    """
    _check_support(trajectory, phi)
    params = trajectory.params
    forcing = trajectory.forcing
    basis = _basis(trajectory)
    dx = basis.dx
    chi = phi.chi(basis.centers)
    dchi = phi.dchi(basis.centers)
    chi_faces = 0.5 * (chi[1:] + chi[:-1])
    jumps, weights, theta0 = _time_weights(trajectory.times, phi)
    slices = _slices(trajectory, basis)

    momenta = np.array([np.sum(item.rho * item.u * chi) * dx for item in slices])
    forces = []
    for item in slices[1:]:
        force = 0.0
        if not phi.is_constant:
            stress = stress_1d(item.dv, item.rho, params)
            force += np.sum((item.rho * item.u * item.v - stress) * dchi) * dx
        force -= params.epsilon * np.sum(item.gradient * np.diff(item.u) * chi_faces)
        if phi.is_constant:
            force += spring_sign * params.k_spring * (item.b - forcing.value(item.t))
        forces.append(force)
    return float(
        momenta[:-1] @ jumps + weights @ np.array(forces) + theta0 * momenta[0]
    )


def weak_residuals(trajectory: Trajectory, phi: WeakTestFunction) -> ResidualReport:
    """Return both weak residuals with the trajectory resolution."""
    params = trajectory.params
    return ResidualReport(
        continuity=weak_continuity_residual(trajectory, phi),
        momentum=weak_momentum_residual(trajectory, phi),
        dt=float(np.max(np.diff(trajectory.times))),
        dx=params.dx,
        n_modes=params.n_modes,
    )


def convergence_order(coarse: ResidualReport, fine: ResidualReport) -> ConvergenceOrder:
    """Return empirical orders of the residuals in the time step."""
    ratio = np.log(coarse.dt / fine.dt)

    def order(a, b):
        return float(np.log(abs(a) / abs(b)) / ratio)

    return ConvergenceOrder(
        continuity=order(coarse.continuity, fine.continuity),
        momentum=order(coarse.momentum, fine.momentum),
    )


def energy_audit(
    trajectory: Trajectory, tolerance: Optional[float] = None
) -> EnergyAudit:
    """Audit the energy inequality over a trajectory.

    Each step must satisfy :math:`E^{n+1} - E^n + dt\\,D^{n+1} \\le
    dt\\,W^{n+1} + tol (1 + E^n)`, with the relative tolerance of the run
    parameters by default.

    """
    if tolerance is None:
        tolerance = trajectory.params.energy_tol
    ledger = trajectory.ledger
    energy = np.array([row.energy for row in ledger])
    dissipation = np.array([row.dissipation for row in ledger])
    power = np.array([row.power_in for row in ledger])
    dt = np.diff(trajectory.times)
    defects = np.diff(energy) + dt * (dissipation[1:] - power[1:])
    allowed = tolerance * (1 + energy[:-1])
    return EnergyAudit(
        defects=defects,
        cumulative=float(np.sum(defects)),
        violations=int(np.count_nonzero(defects > allowed)),
    )


def renormalized_monitor(trajectory: Trajectory, kind="entropy") -> RenormalizedSeries:
    """Monitor the renormalized continuity equation for :math:`b(\\rho)`.

    ``kind`` is ``entropy`` for :math:`b(z) = z \\log z` or ``square`` for
    :math:`b(z) = z^2`. The defect of

    .. math:: \\frac{d}{dt}\\int b(\\rho) + \\int (\\rho b'(\\rho) - b(\\rho))
       v_x + \\varepsilon \\int b''(\\rho) \\rho_x^2 = 0

    is evaluated per step, with the rate as a difference quotient and the
    other terms at the end of the step. The last term is summed over faces as
    :math:`\\varepsilon \\sum \\rho_x \\Delta b'(\\rho)`.

    """
    try:
        renormalization = RENORMALIZATIONS[kind]
    except KeyError:
        raise ValueError(f"Unknown renormalization {kind!r}")
    basis = _basis(trajectory)
    dx = basis.dx
    epsilon = trajectory.params.epsilon
    slices = _slices(trajectory, basis)
    times = trajectory.times
    values = np.array([np.sum(renormalization.value(item.rho)) * dx for item in slices])
    defects = []
    for item in slices[1:]:
        slopes = np.diff(renormalization.derivative(item.rho))
        defects.append(
            np.sum(renormalization.pressure_like(item.rho) * item.dv) * dx
            + epsilon * np.sum(item.gradient * slopes)
        )
    defects = np.diff(values) / np.diff(times) + np.array(defects)
    return RenormalizedSeries(times, values, defects)


def entropy_monitor(trajectory: Trajectory) -> RenormalizedSeries:
    """Monitor :math:`\\int \\rho\\log\\rho` and its balance defect."""
    return renormalized_monitor(trajectory, "entropy")


def momentum_law_residuals(trajectory: Trajectory, include_epsilon=True) -> np.ndarray:
    """Return per-step residuals of the global momentum law.

    The residual of a step is :math:`\\Delta\\int\\rho u + \\Delta t\\,
    (k(b - f) + \\varepsilon \\int \\rho_x u_x)` with forces at the start of
    the step.

    """
    params = trajectory.params
    forcing = trajectory.forcing
    basis = _basis(trajectory)
    dx = basis.dx
    slices = _slices(trajectory, basis)
    momenta = np.array([np.sum(item.rho * item.u) * dx for item in slices])
    forces = []
    for item in slices[:-1]:
        force = params.k_spring * (item.b - forcing.value(item.t))
        if include_epsilon:
            force += params.epsilon * np.sum(item.gradient * np.diff(item.u))
        forces.append(force)
    return np.diff(momenta) + np.diff(trajectory.times) * np.array(forces)


class Check(NamedTuple):
    """Outcome of a verification check."""

    name: str
    value: float
    tolerance: float
    passed: bool


def verify_trajectory(
    trajectory: Trajectory,
    weak_tol: float = 1e-3,
    mass_tol: float = 1e-10,
    energy_tol: Optional[float] = None,
) -> List[Check]:
    """Run all checks on a trajectory saved at every step."""
    length = trajectory.params.length
    horizon = trajectory.times[-1] - trajectory.times[0]
    interior = WeakTestFunction.interior(horizon, length)
    constant = WeakTestFunction.constant(horizon, length)
    audit = energy_audit(trajectory, energy_tol)
    residuals = {
        "weak_continuity": weak_continuity_residual(trajectory, interior),
        "weak_momentum": weak_momentum_residual(trajectory, interior),
        "weak_momentum_newton": weak_momentum_residual(trajectory, constant),
        "momentum_law": float(np.sum(np.abs(momentum_law_residuals(trajectory)))),
    }
    checks = [
        Check("run_completed", float(trajectory.completed), 1.0, trajectory.completed),
        Check(
            "mass_drift",
            trajectory.mass_drift,
            mass_tol,
            trajectory.mass_drift <= mass_tol,
        ),
        Check("energy_violations", float(audit.violations), 0.0, audit.passed),
    ]
    for name, value in residuals.items():
        checks.append(Check(name, value, weak_tol, abs(value) <= weak_tol))
    return checks
