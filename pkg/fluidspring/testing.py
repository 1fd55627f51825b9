"""Testing helpers."""

import numpy as np

from .forcing import ForcingSignal
from .model import (
    FluidParams,
    FluidState,
    energy_row,
)
from .solver.basis import build_basis
from .solver.integrator import (
    STATUS_COMPLETED,
    StepReport,
    Trajectory,
)

#: Parameters of a coarse grid, fast enough for unit tests.
SMALL_GRID = {"n_modes": 4, "n_cells": 32, "dt": 1e-3}


def make_params(**kwargs) -> FluidParams:
    """Return parameters on a coarse grid, with the given changes."""
    return FluidParams(**dict(SMALL_GRID, **kwargs))


def make_state(params, rho=None, v_coeffs=None, b=0.0, beta=0.0, t=0.0):
    """Return a state for the parameters, uniform and at rest by default."""
    if rho is None:
        rho = np.ones(params.n_cells)
    elif np.isscalar(rho):
        rho = np.full(params.n_cells, float(rho))
    if v_coeffs is None:
        v_coeffs = np.zeros(params.n_modes)
    return FluidState(t=t, rho=rho, v_coeffs=v_coeffs, b=b, beta=beta)


def cosine_density(params, mean=1.0, amplitude=0.1, mode=1):
    """Return a cosine density profile at cell centers."""
    centers = (np.arange(params.n_cells) + 0.5) * params.dx
    return mean + amplitude * np.cos(mode * np.pi * centers / params.length)


def make_trajectory(states, params, forcing=None, status=STATUS_COMPLETED):
    """Return a trajectory through the given states.

    Ledger rows are computed from the states and step reports are filled
    with the time steps only.

    """
    if forcing is None:
        forcing = ForcingSignal.zero()
    basis = build_basis(params.length, params.n_modes, params.n_cells)
    trajectory = Trajectory(params, forcing, status=status)
    previous = None
    for state in states:
        report = None
        if previous is not None:
            report = StepReport(
                dt_used=state.t - previous.t,
                fp_iterations=1,
                fp_residual=0.0,
                energy_defect=0.0,
                newton_residual=0.0,
                cfl_ratio=0.0,
            )
        trajectory.append(state, energy_row(state, params, forcing, basis), report)
        previous = state
    return trajectory


def constant_trajectory(params, n_steps=10, **state_kwargs):
    """Return a trajectory repeating the same state at each step."""
    state = make_state(params, **state_kwargs)
    states = [
        FluidState(n * params.dt, state.rho, state.v_coeffs, state.b, state.beta)
        for n in range(n_steps + 1)
    ]
    return make_trajectory(states, params)
