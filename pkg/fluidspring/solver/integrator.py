"""Time stepping of the coupled fluid and container system.

Each step alternates a density update for a frozen velocity iterate with a
linear solve of the momentum system at the updated density, until the
velocity iterate stops changing. The momentum system is implicit in the
viscous, spring, artificial-viscosity and transported-velocity terms, so that
an accepted step satisfies the discrete energy inequality

.. math:: E^{n+1} - E^n + \\Delta t\\, D^{n+1} \\le \\Delta t\\, k \\beta^{n+1}
   f(t^{n+1})

up to the fixed-point tolerance. Steps are rejected and retried with half
the time step when the CFL condition fails, the iteration does not converge,
or the energy inequality is violated.

"""

from typing import (
    List,
    NamedTuple,
    Optional,
    Tuple,
)

import attr
import numpy as np
from scipy import linalg
from toolrack.log import Loggable

from ..forcing import (
    ForcingRangeError,
    ForcingSignal,
)
from ..model import (
    EnergyLedgerRow,
    FluidParams,
    FluidState,
    energy_row,
)
from .basis import (
    Basis,
    build_basis,
    weighted_gram,
)
from .continuity import (
    NonPositiveDensity,
    StepRejected,
    advance_density,
)
from .momentum import (
    convection_matrix,
    epsilon_matrix,
    newton_residual,
    pressure_force,
    viscous_matrix,
)

#: Number of consecutive residual increases that mark a diverging iteration.
DIVERGENCE_STREAK = 3


class FixedPointNotConverged(StepRejected):
    """The fixed-point iteration hit its iteration limit."""

    def __init__(self, iterations, residual):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"Fixed point not converged after {iterations} iterations "
            f"(residual {residual:.3g})"
        )


class EnergyViolation(StepRejected):
    """The discrete energy inequality does not hold for a step."""

    def __init__(self, defect, tolerance):
        self.defect = defect
        self.tolerance = tolerance
        super().__init__(
            f"Energy inequality violated by {defect:.3g} "
            f"(tolerance {tolerance:.3g})"
        )


class StepFailure(Exception):
    """A step failed in a way a smaller time step does not fix."""


class RunAborted(Exception):
    """The time step fell below its lower bound.

    :param float t: the time of the failing step.
    :param float dt: the last time step tried.

    """

    def __init__(self, t, dt):
        self.t = t
        self.dt = dt
        super().__init__(f"Time step underflow at t={t:.6g} (dt={dt:.3g})")


class StepReport(NamedTuple):
    """Diagnostics of an accepted step."""

    dt_used: float
    fp_iterations: int
    #: Last change of the augmented coefficients, in max norm.
    fp_residual: float
    #: :math:`E^{n+1} - E^n + dt\\,D^{n+1} - dt\\,W^{n+1}`, non-positive
    #: when the inequality holds exactly.
    energy_defect: float
    #: Newton law residual :math:`|k(b - f) + T(L) - T(0)|`.
    newton_residual: float
    cfl_ratio: float


class TrajectoryRecord(NamedTuple):
    """A saved time slice; ``report`` is None for the initial state."""

    state: FluidState
    ledger: EnergyLedgerRow
    report: Optional[StepReport]


#: Run termination statuses.
STATUS_RUNNING = "running"
STATUS_COMPLETED = "completed"
STATUS_FAILED = "failed"
STATUS_ABORTED = "aborted"


@attr.s
class Trajectory:
    """Saved output of a run."""

    params: FluidParams = attr.ib()
    forcing: ForcingSignal = attr.ib()
    records: List[TrajectoryRecord] = attr.ib(factory=list)
    status: str = attr.ib(default=STATUS_RUNNING)
    message: str = attr.ib(default="")

    def append(self, state, ledger, report=None):
        if self.records and state.t <= self.records[-1].state.t:
            raise ValueError(
                f"Trajectory times must increase ({state.t} after "
                f"{self.records[-1].state.t})"
            )
        self.records.append(TrajectoryRecord(state, ledger, report))

    @property
    def states(self) -> List[FluidState]:
        return [record.state for record in self.records]

    @property
    def ledger(self) -> List[EnergyLedgerRow]:
        return [record.ledger for record in self.records]

    @property
    def reports(self) -> List[StepReport]:
        """Step reports, excluding the initial record."""
        return [record.report for record in self.records[1:]]

    @property
    def times(self) -> np.ndarray:
        return np.array([record.state.t for record in self.records])

    @property
    def b(self) -> np.ndarray:
        return np.array([record.state.b for record in self.records])

    @property
    def completed(self) -> bool:
        return self.status == STATUS_COMPLETED

    @property
    def mass_drift(self) -> float:
        """Largest relative deviation of the mass from its initial value."""
        masses = np.array([row.mass for row in self.ledger])
        return float(np.max(np.abs(masses - masses[0])) / masses[0])

    def energy_violations(self, tolerance=None) -> int:
        """Count saved steps whose energy defect exceeds the tolerance.

        The default is the relative tolerance of the run parameters.

        """
        if tolerance is None:
            tolerance = self.params.energy_tol
        count = 0
        for previous, record in zip(self.records, self.records[1:]):
            allowed = tolerance * (1 + previous.ledger.energy)
            if record.report.energy_defect > allowed:
                count += 1
        return count


class StepOperators(NamedTuple):
    """Parts of the momentum system that do not depend on the iterate."""

    viscous: np.ndarray
    spring: np.ndarray


class Integrator(Loggable):
    """Advance states of the coupled system.

    :param FluidParams params: the model parameters.
    :param ForcingSignal forcing: the anchor motion.
    :param Basis basis: the sampled eigenbasis; built from the parameters if
        not given.

    """

    def __init__(
        self,
        params: FluidParams,
        forcing: ForcingSignal,
        basis: Optional[Basis] = None,
    ):
        self.params = params
        self.forcing = forcing
        if basis is None:
            basis = build_basis(params.length, params.n_modes, params.n_cells)
        self.basis = basis
        spring = np.zeros((basis.size, basis.size))
        spring[0, 0] = params.k_spring
        self._operators = StepOperators(viscous_matrix(params, basis), spring)

    def step(
        self, state: FluidState, dt: Optional[float] = None
    ) -> Tuple[FluidState, StepReport]:
        """Advance a state by one accepted step.

        Rejected attempts are retried with half the time step, at most
        ``max_halvings`` times.

        """
        if dt is None:
            dt = self.params.dt
        for _ in range(self.params.max_halvings + 1):
            try:
                return self._attempt(state, dt)
            except StepRejected as error:
                self.logger.debug(
                    f"step rejected at t={state.t:.6g}, dt={dt:.3g}: {error}"
                )
                dt /= 2
        raise RunAborted(state.t, dt * 2)

    def run(
        self, initial: FluidState, t_end: float, output_every: int = 1
    ) -> Trajectory:
        """Integrate from an initial state up to ``t_end``.

        Step failures end the run early; the trajectory keeps what was
        computed and records the cause in its status.

        """
        if not t_end > initial.t:
            raise ValueError(f"t_end ({t_end}) must be after t0 ({initial.t})")
        if output_every < 1:
            raise ValueError(f"output_every must be >= 1, got {output_every}")
        trajectory = Trajectory(self.params, self.forcing)
        trajectory.append(initial, self._ledger(initial))
        self.logger.info(f"run started: t0={initial.t:.6g}, t_end={t_end:.6g}")
        state = initial
        n_steps = 0
        # the last step is shortened to land on t_end
        tiny = 1e-9 * self.params.dt_min
        pending = None
        try:
            while t_end - state.t > tiny:
                dt = min(self.params.dt, t_end - state.t)
                state, report = self.step(state, dt)
                n_steps += 1
                pending = (state, report)
                if n_steps % output_every == 0:
                    trajectory.append(state, self._ledger(state), report)
                    pending = None
        except (
            StepFailure,
            RunAborted,
            NonPositiveDensity,
            ForcingRangeError,
        ) as error:
            trajectory.status = (
                STATUS_ABORTED if isinstance(error, RunAborted) else STATUS_FAILED
            )
            trajectory.message = str(error)
            self.logger.warning(f"run terminated at t={state.t:.6g}: {error}")
        else:
            trajectory.status = STATUS_COMPLETED
        if pending is not None:
            trajectory.append(pending[0], self._ledger(pending[0]), pending[1])
        self.logger.info(
            f"run {trajectory.status}: {n_steps} steps, final t={state.t:.6g}"
        )
        return trajectory

    def _ledger(self, state):
        return energy_row(state, self.params, self.forcing, self.basis)

    def _attempt(self, state, dt):
        params, basis = self.params, self.basis
        t_new = state.t + dt
        rho = state.rho
        coeffs = state.coeffs
        momentum = weighted_gram(rho, basis) @ coeffs
        momentum[0] -= dt * params.k_spring * (state.b - self.forcing.value(t_new))
        implicit = self._operators.viscous * dt + self._operators.spring * dt**2

        iterate = coeffs
        residuals = []
        increases = 0
        for iteration in range(1, params.fp_max_iter + 1):
            v_faces = basis.reconstruct_faces(iterate[1:])
            update = advance_density(rho, v_faces, dt, params.epsilon, basis.dx)
            matrix = (
                weighted_gram(update.rho, basis)
                + implicit
                - dt * convection_matrix(update.flux, basis)
                + dt * epsilon_matrix(update.rho, params, basis)
            )
            rhs = momentum + dt * pressure_force(rho, update.upwind, params, basis)
            new_iterate = linalg.lu_solve(linalg.lu_factor(matrix), rhs)
            residual = float(np.max(np.abs(new_iterate - iterate)))
            iterate = new_iterate
            if residuals and residual > residuals[-1]:
                increases += 1
                if increases >= DIVERGENCE_STREAK:
                    raise StepFailure(
                        f"Fixed-point iteration diverging at t={state.t:.6g} "
                        f"(residuals {residuals[-2:] + [residual]})"
                    )
            else:
                increases = 0
            residuals.append(residual)
            if residual <= params.fp_tol:
                break
        else:
            raise FixedPointNotConverged(params.fp_max_iter, residuals[-1])
        self.logger.debug(
            f"fixed point at t={t_new:.6g} after {iteration} iterations"
        )

        new_state = FluidState.from_coeffs(
            t_new, update.rho, iterate, state.b + dt * iterate[0]
        )
        old_row = self._ledger(state)
        new_row = self._ledger(new_state)
        defect = (
            new_row.energy
            - old_row.energy
            + dt * new_row.dissipation
            - dt * new_row.power_in
        )
        tolerance = params.energy_tol * (1 + old_row.energy)
        if defect > tolerance:
            raise EnergyViolation(defect, tolerance)
        report = StepReport(
            dt_used=dt,
            fp_iterations=iteration,
            fp_residual=residuals[-1],
            energy_defect=defect,
            newton_residual=newton_residual(
                new_state.rho,
                new_state.v_coeffs,
                new_state.b,
                t_new,
                params,
                self.forcing,
                basis,
            ),
            cfl_ratio=update.cfl_ratio,
        )
        return new_state, report


def step(
    state: FluidState, params: FluidParams, forcing: ForcingSignal
) -> Tuple[FluidState, StepReport]:
    """Advance a state by one accepted step."""
    return Integrator(params, forcing).step(state)


def run(
    initial: FluidState,
    params: FluidParams,
    forcing: ForcingSignal,
    t_end: float,
    output_every: int = 1,
) -> Trajectory:
    """Integrate a trajectory from an initial state."""
    return Integrator(params, forcing).run(initial, t_end, output_every)
