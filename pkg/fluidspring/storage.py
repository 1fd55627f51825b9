"""Trajectory files.

A trajectory file is a CSV table preceded by a commented header and followed
by a commented status line::

    # fluidspring trajectory
    # format: 1
    # build: 3f2a...
    # config:
    # fluid:
    #   a: 1.0
    # ...
    t,b,beta,mass,...
    0,0.10000000000000001,0,1,...
    # status: completed

The header holds the full configuration echo, so a run can be reproduced
from its file, and a build id hashing it. Numbers are written with 17
significant digits, which reproduces floats exactly.

Density and velocity coefficients at output times are optionally stored in a
NumPy ``.npz`` file next to the table.

"""

import csv
import hashlib
import io
from pathlib import Path
from typing import (
    Dict,
    List,
    NamedTuple,
    Optional,
)

import attr
import numpy as np
import yaml

from .config import (
    ConfigError,
    RunConfig,
)
from .model import (
    EnergyLedgerRow,
    FluidState,
    InvalidParameters,
)
from .solver.integrator import (
    StepReport,
    Trajectory,
)

FORMAT_VERSION = 1

MAGIC = "# fluidspring trajectory"

#: Columns of the trajectory table.
COLUMNS = (
    "t",
    "b",
    "beta",
    "mass",
    "total_momentum",
    "kinetic",
    "pressure_potential",
    "artificial_potential",
    "spring",
    "dissipation_visc",
    "dissipation_eps",
    "power_in",
    "fp_iterations",
    "fp_residual",
    "newton_residual",
    "min_rho",
    "max_rho",
)


class TrajectoryFormatError(Exception):
    """A trajectory file can't be parsed.

    :param str message: the error description.
    :param int line: the 1-based line number of the error, if known.

    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def format_number(value) -> str:
    """Format a number with 17 significant digits."""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def config_text(config: RunConfig) -> str:
    """Return the canonical YAML text of a configuration echo."""
    return yaml.safe_dump(config.echo(), sort_keys=True, default_flow_style=False)


def build_id(text: str) -> str:
    return hashlib.sha1(text.encode("utf-8")).hexdigest()


def snapshot_path(path) -> Path:
    """Return the path of the snapshot file for a trajectory file."""
    return Path(path).with_suffix(".npz")


class Snapshots(NamedTuple):
    """Full states at output times."""

    t: np.ndarray
    rho: np.ndarray
    v_coeffs: np.ndarray
    b: np.ndarray
    beta: np.ndarray

    @classmethod
    def from_trajectory(cls, trajectory: Trajectory):
        states = trajectory.states
        return cls(
            t=np.array([state.t for state in states]),
            rho=np.array([state.rho for state in states]),
            v_coeffs=np.array([state.v_coeffs for state in states]),
            b=np.array([state.b for state in states]),
            beta=np.array([state.beta for state in states]),
        )

    def states(self) -> List[FluidState]:
        return [
            FluidState(t=t, rho=rho, v_coeffs=v_coeffs, b=b, beta=beta)
            for t, rho, v_coeffs, b, beta in zip(*self)
        ]


def _row(record) -> List[str]:
    state, ledger, report = record
    if report is None:
        iterations, fp_residual, newton = 0, float("nan"), float("nan")
    else:
        iterations = report.fp_iterations
        fp_residual = report.fp_residual
        newton = report.newton_residual
    values = (
        state.t,
        state.b,
        state.beta,
        ledger.mass,
        ledger.total_momentum,
        ledger.kinetic,
        ledger.pressure_potential,
        ledger.artificial_potential,
        ledger.spring,
        ledger.dissipation_visc,
        ledger.dissipation_eps,
        ledger.power_in,
        iterations,
        fp_residual,
        newton,
        state.rho.min(),
        state.rho.max(),
    )
    return [format_number(value) for value in values]


def write_trajectory(path, config: RunConfig, trajectory: Trajectory):
    """Write a trajectory file, and its snapshots if the configuration asks.

    Failed runs are written too, with their status.

    """
    path = Path(path)
    text = config_text(config)
    out = io.StringIO()
    out.write(f"{MAGIC}\n")
    out.write(f"# format: {FORMAT_VERSION}\n")
    out.write(f"# build: {build_id(text)}\n")
    out.write("# config:\n")
    for line in text.splitlines():
        out.write(f"# {line}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(COLUMNS)
    for record in trajectory.records:
        writer.writerow(_row(record))
    out.write(f"# status: {trajectory.status}\n")
    if trajectory.message:
        message = " ".join(trajectory.message.splitlines())
        out.write(f"# message: {message}\n")
    path.write_text(out.getvalue())
    if config.snapshots:
        snapshots = Snapshots.from_trajectory(trajectory)
        np.savez(snapshot_path(path), **snapshots._asdict())


@attr.s
class TrajectoryFile:
    """Content of a trajectory file."""

    config: RunConfig = attr.ib()
    build_id: str = attr.ib()
    columns: Dict[str, np.ndarray] = attr.ib()
    status: str = attr.ib()
    message: str = attr.ib(default="")
    snapshots: Optional[Snapshots] = attr.ib(default=None)

    @property
    def completed(self) -> bool:
        return self.status == "completed"

    def to_trajectory(self) -> Trajectory:
        """Rebuild the :class:`Trajectory` from the table and snapshots.

        Energy defects are recomputed from the ledger; CFL ratios are not
        stored and are NaN.

        """
        if self.snapshots is None:
            raise TrajectoryFormatError("snapshot file is required")
        columns = self.columns
        if not np.array_equal(self.snapshots.t, columns["t"]):
            raise TrajectoryFormatError("snapshot times differ from the table")
        trajectory = Trajectory(
            self.config.params,
            self.config.forcing,
            status=self.status,
            message=self.message,
        )
        previous = None
        for index, state in enumerate(self.snapshots.states()):
            ledger = EnergyLedgerRow(
                *(columns[name][index] for name in EnergyLedgerRow._fields)
            )
            report = None
            if previous is not None:
                dt = state.t - previous.t
                report = StepReport(
                    dt_used=dt,
                    fp_iterations=int(columns["fp_iterations"][index]),
                    fp_residual=columns["fp_residual"][index],
                    energy_defect=(
                        ledger.energy
                        - previous.energy
                        + dt * (ledger.dissipation - ledger.power_in)
                    ),
                    newton_residual=columns["newton_residual"][index],
                    cfl_ratio=float("nan"),
                )
            trajectory.append(state, ledger, report)
            previous = ledger
        return trajectory


def _header_value(line, number, key):
    prefix = f"# {key}: "
    if not line.startswith(prefix):
        raise TrajectoryFormatError(f"expected '{prefix.strip()}' header", line=number)
    return line[len(prefix) :]


def read_trajectory(path) -> TrajectoryFile:
    """Read a trajectory file, with its snapshots if present."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except FileNotFoundError:
        raise TrajectoryFormatError(f"file not found: {path}")
    if not lines or lines[0] != MAGIC:
        raise TrajectoryFormatError("not a trajectory file", line=1)
    if len(lines) < 4:
        raise TrajectoryFormatError("truncated header", line=len(lines) + 1)
    version = _header_value(lines[1], 2, "format")
    if version != str(FORMAT_VERSION):
        raise TrajectoryFormatError(
            f"unsupported format version {version} (expected {FORMAT_VERSION})",
            line=2,
        )
    header_build = _header_value(lines[2], 3, "build")
    if lines[3] != "# config:":
        raise TrajectoryFormatError("expected '# config:' header", line=4)

    number = 4
    config_lines = []
    while number < len(lines) and lines[number].startswith("#"):
        config_lines.append(lines[number][2:])
        number += 1
    text = "\n".join(config_lines) + "\n"
    if build_id(text) != header_build:
        raise TrajectoryFormatError("build id does not match the config", line=3)
    try:
        config = RunConfig.from_mapping(yaml.safe_load(text))
    except (ConfigError, InvalidParameters, yaml.YAMLError) as error:
        raise TrajectoryFormatError(f"invalid config ({error})", line=5)

    if number == len(lines) or lines[number].split(",") != list(COLUMNS):
        raise TrajectoryFormatError(
            "missing or invalid column header", line=number + 1
        )
    rows = []
    number += 1
    while number < len(lines) and not lines[number].startswith("#"):
        fields = lines[number].split(",")
        if len(fields) != len(COLUMNS):
            raise TrajectoryFormatError(
                f"expected {len(COLUMNS)} fields, got {len(fields)}", line=number + 1
            )
        try:
            rows.append([float(field) for field in fields])
        except ValueError as error:
            raise TrajectoryFormatError(str(error), line=number + 1)
        number += 1
    if not rows:
        raise TrajectoryFormatError("no data rows", line=number + 1)
    if number == len(lines):
        raise TrajectoryFormatError("missing status line", line=number + 1)
    status = _header_value(lines[number], number + 1, "status")
    message = ""
    if number + 1 < len(lines):
        message = _header_value(lines[number + 1], number + 2, "message")

    table = np.array(rows)
    snapshots = None
    companion = snapshot_path(path)
    if companion.exists():
        with np.load(companion) as data:
            snapshots = Snapshots(*(data[name] for name in Snapshots._fields))
    return TrajectoryFile(
        config=config,
        build_id=header_build,
        columns={name: table[:, index] for index, name in enumerate(COLUMNS)},
        status=status,
        message=message,
        snapshots=snapshots,
    )
