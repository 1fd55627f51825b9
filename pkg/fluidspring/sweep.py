"""Parameter sweeps over run configurations.

A sweep file names a base configuration and a list of values for some of the
sweepable parameters:

.. code:: yaml

   base: free-decay        # a preset name, or a configuration mapping
   overrides:
     - run.t_end=5
   axes:
     epsilon: [4e-3, 2e-3, 1e-3]
     mu: [1.0, 0.5]

One run is made for each combination of axis values. Runs are executed
concurrently in an executor; results are ordered by case index, so the
metrics table does not depend on scheduling.

"""

import asyncio
import copy
from concurrent.futures import Executor
import csv
import itertools
from pathlib import Path
from typing import (
    Any,
    Dict,
    Iterable,
    List,
    NamedTuple,
    Optional,
    TextIO,
    Tuple,
)

import attr
import numpy as np
from toolrack.log import Loggable

from .config import (
    ConfigError,
    RunConfig,
    apply_overrides,
    preset_mapping,
    read_mapping,
)
from .metrics import (
    decay_rate,
    envelope_slope,
    integrate_right,
)
from .solver.integrator import Integrator
from .storage import (
    format_number,
    write_trajectory,
)

#: Sweepable parameters and the configuration keys they set.
AXES = {
    "a": ("fluid", "a"),
    "gamma": ("fluid", "gamma"),
    "mu": ("fluid", "mu"),
    "epsilon": ("fluid", "epsilon"),
    "delta": ("fluid", "delta"),
    "omega": ("forcing", "omega"),
    "k": ("fluid", "k_spring"),
}

METRICS = ("decay_rate", "envelope_slope", "total_dissipation", "mass_drift")


@attr.s(frozen=True)
class SweepCase:
    """A single run of a sweep."""

    index: int = attr.ib()
    #: Axis values of the case, as (axis, value) pairs.
    values: Tuple[Tuple[str, float], ...] = attr.ib()
    config: RunConfig = attr.ib()


class MetricsRow(NamedTuple):
    """Metrics of a sweep case."""

    index: int
    values: Tuple[Tuple[str, float], ...]
    status: str
    decay_rate: float
    envelope_slope: float
    total_dissipation: float
    mass_drift: float
    message: str = ""


class CaseResult(NamedTuple):
    """Metrics of a case with its displacement trace."""

    row: MetricsRow
    times: np.ndarray
    b: np.ndarray


@attr.s(frozen=True)
class SweepConfig:
    """Base configuration mapping and axis values."""

    base: Dict[str, Any] = attr.ib()
    axes: Dict[str, Tuple[float, ...]] = attr.ib()

    @axes.validator
    def _check_axes(self, attribute, value):
        if not value:
            raise ConfigError("no axes given", location="axes")
        for axis, values in value.items():
            if axis not in AXES:
                raise ConfigError(
                    f"unknown axis, expected one of {', '.join(AXES)}",
                    location=f"axes.{axis}",
                )
            if not values:
                raise ConfigError("no values given", location=f"axes.{axis}")

    @classmethod
    def from_mapping(cls, mapping):
        if not isinstance(mapping, dict):
            raise ConfigError("sweep file must be a mapping")
        unknown = set(mapping) - {"base", "overrides", "axes"}
        if unknown:
            raise ConfigError("unknown key", location=sorted(unknown)[0])
        base = mapping.get("base", {})
        if isinstance(base, str):
            base = preset_mapping(base)
        elif not isinstance(base, dict):
            raise ConfigError("must be a preset name or a mapping", location="base")
        base = apply_overrides(base, mapping.get("overrides") or ())
        axes = mapping.get("axes") or {}
        if not isinstance(axes, dict):
            raise ConfigError("must be a mapping", location="axes")
        try:
            axes = {
                axis: tuple(float(value) for value in values)
                for axis, values in axes.items()
            }
        except (TypeError, ValueError) as error:
            raise ConfigError(f"invalid axis values ({error})", location="axes")
        return cls(base=base, axes=axes)

    def cases(self) -> List[SweepCase]:
        """Return the cases for all combinations of axis values.

        Axes vary in alphabetical order, the last one fastest.

        """
        names = sorted(self.axes)
        cases = []
        combinations = itertools.product(*(self.axes[name] for name in names))
        for index, combination in enumerate(combinations):
            mapping = copy.deepcopy(self.base)
            for name, value in zip(names, combination):
                section, key = AXES[name]
                mapping.setdefault(section, {})[key] = value
            config = RunConfig.from_mapping(mapping)
            cases.append(SweepCase(index, tuple(zip(names, combination)), config))
        return cases


def load_sweep(path) -> SweepConfig:
    """Load a sweep file."""
    return SweepConfig.from_mapping(read_mapping(path))


def case_metrics(case: SweepCase, trajectory) -> MetricsRow:
    times = trajectory.times
    dissipation = [row.dissipation for row in trajectory.ledger]
    return MetricsRow(
        index=case.index,
        values=case.values,
        status=trajectory.status,
        decay_rate=decay_rate(times, trajectory.b),
        envelope_slope=envelope_slope(times, trajectory.b).slope,
        total_dissipation=integrate_right(times, dissipation),
        mass_drift=trajectory.mass_drift,
        message=trajectory.message,
    )


def run_case(case: SweepCase, output_dir: Optional[Path] = None) -> CaseResult:
    """Run a sweep case, recording failures in the result."""
    config = case.config
    try:
        integrator = Integrator(config.params, config.forcing)
        trajectory = integrator.run(
            config.build_initial_state(integrator.basis),
            config.t_end,
            config.output_every,
        )
    except Exception as error:
        nan = float("nan")
        row = MetricsRow(
            case.index, case.values, "failed", nan, nan, nan, nan, str(error)
        )
        return CaseResult(row, np.array([]), np.array([]))
    if output_dir is not None:
        path = Path(output_dir) / f"case-{case.index}.csv"
        write_trajectory(path, config, trajectory)
    return CaseResult(case_metrics(case, trajectory), trajectory.times, trajectory.b)


class SweepRunner(Loggable):
    """Run sweep cases concurrently.

    :param executor: the executor to run cases in; the event loop default
        executor is used if not specified.
    :param output_dir: directory for per-case trajectory files, if any.

    """

    def __init__(
        self,
        executor: Optional[Executor] = None,
        output_dir: Optional[Path] = None,
    ):
        self.executor = executor
        self.output_dir = output_dir

    async def run(self, cases: Iterable[SweepCase]) -> List[CaseResult]:
        """Run all cases and return results ordered by case index."""
        loop = asyncio.get_running_loop()
        cases = list(cases)
        self.logger.info(f"running {len(cases)} sweep cases")
        futures = [
            loop.run_in_executor(self.executor, run_case, case, self.output_dir)
            for case in cases
        ]
        results = []
        for result in await asyncio.gather(*futures):
            row = result.row
            if row.status == "completed":
                self.logger.info(f"case {row.index} completed")
            else:
                self.logger.warning(f"case {row.index} {row.status}: {row.message}")
            results.append(result)
        return sorted(results, key=lambda result: result.row.index)


def sweep(cases: Iterable[SweepCase], **kwargs) -> List[CaseResult]:
    """Run a sweep synchronously."""
    return asyncio.run(SweepRunner(**kwargs).run(cases))


def pairwise_sup_differences(results: List[CaseResult]) -> List[float]:
    """Return sup-norm differences of b(t) between consecutive cases.

    The later trace is interpolated on the times of the earlier one, over the
    common time range. Pairs involving a failed case give NaN.

    """
    differences = []
    for first, second in zip(results, results[1:]):
        if first.row.status != "completed" or second.row.status != "completed":
            differences.append(float("nan"))
            continue
        end = min(first.times[-1], second.times[-1])
        mask = first.times <= end
        other = np.interp(first.times[mask], second.times, second.b)
        differences.append(float(np.max(np.abs(first.b[mask] - other))))
    return differences


def write_metrics(out: TextIO, results: List[CaseResult]):
    """Write the metrics table as CSV."""
    rows = [result.row for result in results]
    axes = [name for name, _ in rows[0].values] if rows else []
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["index", *axes, "status", *METRICS])
    for row in rows:
        writer.writerow(
            [
                row.index,
                *(format_number(value) for _, value in row.values),
                row.status,
                *(format_number(getattr(row, name)) for name in METRICS),
            ]
        )
