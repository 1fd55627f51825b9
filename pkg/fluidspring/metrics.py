"""Oscillation metrics extracted from sampled displacement traces."""

from typing import NamedTuple

import numpy as np
from scipy import (
    signal,
    stats,
)


class Peaks(NamedTuple):
    """Local maxima of :math:`|b|`."""

    times: np.ndarray
    amplitudes: np.ndarray


class LinearFit(NamedTuple):
    """Least-squares line through a set of points."""

    slope: float
    intercept: float
    rvalue: float

    @property
    def r_squared(self) -> float:
        return self.rvalue**2


def peak_times(times, values) -> Peaks:
    """Return the local maxima of ``|values|``.

    Each sampled maximum is refined by the parabola through it and its two
    neighbours.

    """
    times = np.asarray(times, dtype=float)
    magnitude = np.abs(np.asarray(values, dtype=float))
    indices, _ = signal.find_peaks(magnitude)
    peak_t = []
    peak_value = []
    for index in indices:
        left, middle, right = magnitude[index - 1 : index + 2]
        curvature = left - 2 * middle + right
        shift = 0.0 if curvature == 0 else 0.5 * (left - right) / curvature
        step = 0.5 * (times[index + 1] - times[index - 1])
        peak_t.append(times[index] + shift * step)
        peak_value.append(middle - 0.25 * (left - right) * shift)
    return Peaks(np.array(peak_t), np.array(peak_value))


def _fit(x, y) -> LinearFit:
    result = stats.linregress(x, y)
    return LinearFit(
        float(result.slope), float(result.intercept), float(result.rvalue)
    )


def decay_rate(times, values, min_peaks=3) -> float:
    """Return the exponential decay rate of the peaks of ``|values|``.

    The rate is minus the slope of a log-linear fit of peak amplitudes, so it
    is positive for a decaying oscillation. NaN is returned when fewer than
    ``min_peaks`` peaks are found.

    """
    peaks = peak_times(times, values)
    if len(peaks.times) < min_peaks or np.any(peaks.amplitudes <= 0):
        return float("nan")
    return -_fit(peaks.times, np.log(peaks.amplitudes)).slope


def envelope_slope(times, values, min_peaks=3) -> LinearFit:
    """Return the linear fit of peak amplitudes of ``|values|`` against time.

    A resonant undamped oscillator has a linearly growing envelope.

    """
    peaks = peak_times(times, values)
    if len(peaks.times) < min_peaks:
        nan = float("nan")
        return LinearFit(nan, nan, nan)
    return _fit(peaks.times, peaks.amplitudes)


def integrate_right(times, values) -> float:
    """Integrate samples with the right-endpoint rule of the time stepper."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    return float(np.sum(np.diff(times) * values[1:]))
