"""Prescribed motion of the spring anchor."""

from typing import (
    Any,
    Dict,
)

import attr
import numpy as np
from scipy.interpolate import CubicSpline

#: Supported forcing kinds.
FORCING_KINDS = ("zero", "sinusoid", "sampled")


class InvalidForcing(ValueError):
    """The forcing description is invalid."""

    def __init__(self, message):
        super().__init__(f"Invalid forcing: {message}")


class ForcingRangeError(ValueError):
    """A sampled forcing was evaluated outside of its sample range.

    :param float t: the requested time.
    :param float start: the first sample time.
    :param float end: the last sample time.

    """

    def __init__(self, t, start, end):
        super().__init__(f"Forcing evaluated at t={t}, outside [{start}, {end}]")


def _float_tuple(value):
    return tuple(float(item) for item in value)


@attr.s(frozen=True)
class ForcingSignal:
    """Position :math:`f(t)` of the spring anchor.

    Use the :func:`zero`, :func:`sinusoid` and :func:`sampled` constructors.
    A sinusoid is :math:`A \\sin(\\omega t + \\phi)`; sampled signals are
    interpolated by a cubic spline, so :math:`f` and :math:`\\dot f` are
    continuous.

    """

    kind = attr.ib(default="zero")
    amplitude = attr.ib(default=0.0, converter=float)
    omega = attr.ib(default=0.0, converter=float)
    phase = attr.ib(default=0.0, converter=float)
    times = attr.ib(default=(), converter=_float_tuple)
    values = attr.ib(default=(), converter=_float_tuple)

    _spline = attr.ib(default=None, init=False, repr=False, eq=False)

    def __attrs_post_init__(self):
        if self.kind not in FORCING_KINDS:
            raise InvalidForcing(f"unknown kind {self.kind!r}")
        if self.kind != "sampled":
            return
        if len(self.times) < 2 or len(self.times) != len(self.values):
            raise InvalidForcing("sampled forcing needs matching times and values")
        if np.any(np.diff(self.times) <= 0):
            raise InvalidForcing("sample times must be strictly increasing")
        object.__setattr__(self, "_spline", CubicSpline(self.times, self.values))

    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def sinusoid(cls, amplitude=1.0, omega=1.0, phase=0.0):
        return cls(kind="sinusoid", amplitude=amplitude, omega=omega, phase=phase)

    @classmethod
    def sampled(cls, times, values):
        return cls(kind="sampled", times=times, values=values)

    def value(self, t: float) -> float:
        """Return :math:`f(t)`."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "sinusoid":
            return self.amplitude * np.sin(self.omega * t + self.phase)
        self._check_range(t)
        return float(self._spline(t))

    def rate(self, t: float) -> float:
        """Return :math:`\\dot f(t)`."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "sinusoid":
            return self.amplitude * self.omega * np.cos(self.omega * t + self.phase)
        self._check_range(t)
        return float(self._spline(t, 1))

    def describe(self) -> Dict[str, Any]:
        """Return a mapping describing the signal, suitable for config files."""
        if self.kind == "zero":
            return {"kind": "zero"}
        if self.kind == "sinusoid":
            return {
                "kind": "sinusoid",
                "amplitude": self.amplitude,
                "omega": self.omega,
                "phase": self.phase,
            }
        return {
            "kind": "sampled",
            "times": list(self.times),
            "values": list(self.values),
        }

    def _check_range(self, t):
        start, end = self.times[0], self.times[-1]
        # allow roundoff from accumulated time steps
        slack = 1e-12 * max(1.0, abs(end))
        if t < start - slack or t > end + slack:
            raise ForcingRangeError(t, start, end)
