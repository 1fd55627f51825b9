"""Rigid-body reference: a mass on a spring with a moving anchor.

When the fluid moves as a rigid body the container displacement solves

.. math:: M \\ddot b + k b = k f(t)

with M the total mass. Without damping, a sinusoidal anchor at the natural
frequency :math:`\\sqrt{k/M}` drives a linearly growing response.

"""

from typing import (
    NamedTuple,
    Tuple,
)

import attr
import numpy as np

from .forcing import ForcingSignal


class UnsupportedForcing(ValueError):
    """The closed form is only available for zero and sinusoidal forcing."""

    def __init__(self, kind):
        super().__init__(f"No closed-form solution for {kind!r} forcing")


def _positive(instance, attribute, value):
    if not value > 0:
        raise ValueError(f"{attribute.name} must be > 0, got {value}")


@attr.s(frozen=True)
class RigidParams:
    """Parameters and initial data of the rigid oscillator."""

    k_spring = attr.ib(converter=float, validator=_positive)
    mass = attr.ib(converter=float, validator=_positive)
    forcing = attr.ib(factory=ForcingSignal.zero)
    b0 = attr.ib(default=0.0, converter=float)
    beta0 = attr.ib(default=0.0, converter=float)

    @classmethod
    def from_constants(cls, k_spring, mass, forcing, c1=0.0, c2=0.0):
        """Build parameters from homogeneous-solution constants.

        The response is :math:`c_1 \\sin(\\omega_0 t) + c_2 \\cos(\\omega_0 t)`
        plus the particular solution.

        """
        params = cls(k_spring, mass, forcing)
        b0, beta0 = params._particular(np.zeros(1))
        omega0 = params.natural_frequency
        return attr.evolve(
            params, b0=c2 + float(b0[0]), beta0=c1 * omega0 + float(beta0[0])
        )

    @property
    def natural_frequency(self) -> float:
        return float(np.sqrt(self.k_spring / self.mass))

    @property
    def resonant(self) -> bool:
        """Whether a sinusoidal anchor runs at the natural frequency."""
        return self.forcing.kind == "sinusoid" and bool(
            np.isclose(self.forcing.omega, self.natural_frequency, rtol=1e-12)
        )

    @property
    def particular_amplitude(self) -> float:
        """Amplitude :math:`A k / (k - M \\omega^2)` of the steady response.

        Infinite at resonance.

        """
        if self.forcing.kind == "zero":
            return 0.0
        if self.resonant:
            return float("inf")
        omega = self.forcing.omega
        return (
            self.forcing.amplitude
            * self.k_spring
            / (self.k_spring - self.mass * omega**2)
        )

    def energy(self, b, beta):
        """Mechanical energy :math:`M\\dot b^2/2 + k b^2/2`."""
        return 0.5 * self.mass * np.asarray(beta) ** 2 + 0.5 * self.k_spring * (
            np.asarray(b) ** 2
        )

    def _particular(self, t) -> Tuple[np.ndarray, np.ndarray]:
        forcing = self.forcing
        if forcing.kind == "zero":
            return np.zeros_like(t), np.zeros_like(t)
        if forcing.kind != "sinusoid":
            raise UnsupportedForcing(forcing.kind)
        omega = forcing.omega
        angle = omega * t + forcing.phase
        if self.resonant:
            # secular response
            slope = -0.5 * forcing.amplitude * omega
            return (
                slope * t * np.cos(angle),
                slope * (np.cos(angle) - omega * t * np.sin(angle)),
            )
        amplitude = self.particular_amplitude
        return amplitude * np.sin(angle), amplitude * omega * np.cos(angle)


class RigidSolution(NamedTuple):
    """Sampled displacement and velocity."""

    t: np.ndarray
    b: np.ndarray
    beta: np.ndarray


def rigid_closed_form(t, params: RigidParams) -> Tuple[np.ndarray, np.ndarray]:
    """Return :math:`(b, \\dot b)` at the given times.

    Works on scalar and array times.

    """
    t = np.asarray(t, dtype=float)
    omega0 = params.natural_frequency
    b_p0, beta_p0 = params._particular(np.zeros(1))
    c2 = params.b0 - b_p0[0]
    c1 = (params.beta0 - beta_p0[0]) / omega0
    b_p, beta_p = params._particular(t)
    sin, cos = np.sin(omega0 * t), np.cos(omega0 * t)
    b = c1 * sin + c2 * cos + b_p
    beta = omega0 * (c1 * cos - c2 * sin) + beta_p
    return b, beta


def rigid_ode(params: RigidParams, t_end, dt) -> RigidSolution:
    """Integrate the oscillator with the classical fourth-order Runge-Kutta
    method.

    Any forcing signal is supported.

    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    n_steps = int(round(t_end / dt))
    stiffness = params.k_spring / params.mass
    anchor = params.forcing.value

    def acceleration(t, b):
        return stiffness * (anchor(t) - b)

    b, beta = params.b0, params.beta0
    bs, betas = [b], [beta]
    for n in range(n_steps):
        t = n * dt
        half = t + 0.5 * dt
        k1b, k1v = beta, acceleration(t, b)
        k2b, k2v = beta + 0.5 * dt * k1v, acceleration(half, b + 0.5 * dt * k1b)
        k3b, k3v = beta + 0.5 * dt * k2v, acceleration(half, b + 0.5 * dt * k2b)
        k4b, k4v = beta + dt * k3v, acceleration(t + dt, b + dt * k3b)
        b += dt / 6 * (k1b + 2 * k2b + 2 * k3b + k4b)
        beta += dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        bs.append(b)
        betas.append(beta)
    times = np.arange(n_steps + 1) * dt
    return RigidSolution(times, np.array(bs), np.array(betas))
