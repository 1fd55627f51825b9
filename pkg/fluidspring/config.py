"""Run configuration files and presets.

A run configuration is a YAML mapping with the ``fluid``, ``initial``,
``forcing`` and ``run`` sections:

.. code:: yaml

   fluid:
     mu: 1.0
     gamma: 2.0
   initial:
     density: {profile: cosine, mean: 1.0, amplitude: 0.1, mode: 1}
     velocity_modes: [0.0, 0.01]
     b0: 0.1
   forcing:
     kind: sinusoid
     amplitude: 0.1
     omega: 2.0
   run:
     t_end: 20.0

Missing keys take their default values, unknown keys are errors. Single
values can be overridden with ``section.key=value`` strings, where the value
is parsed as YAML.

Built-in presets are available by name, and more can be added as YAML files
in the ``fluidspring/presets`` directory under the XDG config home.

"""

import copy
from pathlib import Path
from typing import (
    Any,
    Dict,
    Iterable,
    List,
    Optional,
    Tuple,
)

import attr
import numpy as np
from xdg.BaseDirectory import xdg_config_home
import yaml

from .forcing import (
    FORCING_KINDS,
    ForcingSignal,
    InvalidForcing,
)
from .model import (
    FluidParams,
    FluidState,
    InvalidParameters,
)
from .solver.basis import (
    Basis,
    build_basis,
)


class ConfigError(Exception):
    """The run configuration is invalid.

    :param str message: the error description.
    :param str location: where the error is, such as a file position or a
        dotted key.

    """

    def __init__(self, message, location=None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)


SECTIONS = ("fluid", "initial", "forcing", "run")
DENSITY_PROFILES = ("uniform", "cosine")


@attr.s(frozen=True)
class DensityProfile:
    """Initial density, :math:`m + A \\cos(j \\pi x / L)` for the cosine
    profile.

    """

    profile = attr.ib(default="uniform")
    mean = attr.ib(default=1.0, converter=float)
    amplitude = attr.ib(default=0.0, converter=float)
    mode = attr.ib(default=1, converter=int)

    @profile.validator
    def _check_profile(self, attribute, value):
        if value not in DENSITY_PROFILES:
            raise ConfigError(
                f"unknown profile {value!r}, expected one of "
                f"{', '.join(DENSITY_PROFILES)}",
                location="initial.density.profile",
            )

    def sample(self, centers, length) -> np.ndarray:
        rho = np.full(len(centers), self.mean)
        if self.profile == "cosine":
            rho += self.amplitude * np.cos(self.mode * np.pi * centers / length)
        if rho.min() <= 0:
            raise ConfigError(
                f"initial density must be positive, minimum is {rho.min()}",
                location="initial.density",
            )
        return rho


def _float_tuple(value):
    return tuple(float(item) for item in value)


@attr.s(frozen=True)
class InitialCondition:
    """Initial density profile, velocity modes and container motion."""

    density = attr.ib(factory=DensityProfile)
    velocity_modes = attr.ib(default=(), converter=_float_tuple)
    b0 = attr.ib(default=0.0, converter=float)
    beta0 = attr.ib(default=0.0, converter=float)

    def build_state(self, params: FluidParams, basis: Optional[Basis] = None):
        """Return the initial :class:`FluidState` on the parameters' grid."""
        if basis is None:
            basis = build_basis(params.length, params.n_modes, params.n_cells)
        if len(self.velocity_modes) > params.n_modes:
            raise ConfigError(
                f"{len(self.velocity_modes)} velocity modes given for "
                f"{params.n_modes} basis modes",
                location="initial.velocity_modes",
            )
        v_coeffs = np.zeros(params.n_modes)
        v_coeffs[: len(self.velocity_modes)] = self.velocity_modes
        return FluidState(
            t=0.0,
            rho=self.density.sample(basis.centers, params.length),
            v_coeffs=v_coeffs,
            b=self.b0,
            beta=self.beta0,
        )

    def describe(self) -> Dict[str, Any]:
        return {
            "density": attr.asdict(self.density),
            "velocity_modes": list(self.velocity_modes),
            "b0": self.b0,
            "beta0": self.beta0,
        }


@attr.s(frozen=True)
class RunConfig:
    """Everything that defines a run.

    Runs are deterministic: the same configuration produces the same
    trajectory, bit for bit.

    """

    params = attr.ib(factory=FluidParams)
    initial = attr.ib(factory=InitialCondition)
    forcing = attr.ib(factory=ForcingSignal.zero)
    t_end = attr.ib(default=1.0, converter=float)
    output_every = attr.ib(default=1, converter=int)
    snapshots = attr.ib(default=True, converter=bool)
    #: Trajectory file path; not part of the echo.
    output = attr.ib(default=None)

    deterministic = True

    def __attrs_post_init__(self):
        if not self.t_end > 0:
            raise ConfigError(f"must be > 0, got {self.t_end}", location="run.t_end")
        if self.output_every < 1:
            raise ConfigError(
                f"must be >= 1, got {self.output_every}",
                location="run.output_every",
            )
        if self.forcing.kind == "sampled":
            start, end = self.forcing.times[0], self.forcing.times[-1]
            if start > 0 or end < self.t_end:
                raise ConfigError(
                    f"samples cover [{start}, {end}], must cover [0, {self.t_end}]",
                    location="forcing.times",
                )

    @classmethod
    def from_mapping(cls, mapping, output=None):
        """Build a configuration from a sectioned mapping.

        :raises ConfigError: on unknown or invalid keys.
        :raises InvalidParameters: when model invariants are violated.

        """
        if mapping is None:
            mapping = {}
        if not isinstance(mapping, dict):
            raise ConfigError("configuration must be a mapping")
        _check_keys(mapping, SECTIONS, "")
        fluid = _section(mapping, "fluid", attr.fields_dict(FluidParams))
        initial = _section(mapping, "initial", attr.fields_dict(InitialCondition))
        forcing = _section(mapping, "forcing", attr.fields_dict(ForcingSignal))
        run = _section(mapping, "run", ("t_end", "output_every", "snapshots"))
        if "_spline" in forcing:
            raise ConfigError("unknown key", location="forcing._spline")

        params = _build("fluid", FluidParams, fluid)
        density = initial.pop("density", {})
        if not isinstance(density, dict):
            raise ConfigError("must be a mapping", location="initial.density")
        _check_keys(density, attr.fields_dict(DensityProfile), "initial.density")
        initial_condition = _build(
            "initial",
            InitialCondition,
            dict(initial, density=_build("initial.density", DensityProfile, density)),
        )
        if forcing.get("kind", "zero") not in FORCING_KINDS:
            raise ConfigError(
                f"unknown kind {forcing['kind']!r}, expected one of "
                f"{', '.join(FORCING_KINDS)}",
                location="forcing.kind",
            )
        return _build(
            "run",
            cls,
            dict(
                run,
                params=params,
                initial=initial_condition,
                forcing=_build("forcing", ForcingSignal, forcing),
                output=output,
            ),
        )

    def echo(self) -> Dict[str, Any]:
        """Return the canonical mapping of everything influencing the run.

        Feeding it to :meth:`from_mapping` gives back an equal configuration.

        """
        return {
            "fluid": attr.asdict(self.params),
            "initial": self.initial.describe(),
            "forcing": self.forcing.describe(),
            "run": {
                "t_end": self.t_end,
                "output_every": self.output_every,
                "snapshots": self.snapshots,
            },
        }

    def build_initial_state(self, basis: Optional[Basis] = None) -> FluidState:
        return self.initial.build_state(self.params, basis)

    def replace(self, **changes):
        return attr.evolve(self, **changes)


def _check_keys(mapping, allowed, prefix):
    for key in mapping:
        if key not in allowed:
            location = f"{prefix}.{key}" if prefix else key
            raise ConfigError("unknown key", location=location)


def _section(mapping, name, allowed) -> Dict[str, Any]:
    section = mapping.get(name)
    if section is None:
        section = {}
    if not isinstance(section, dict):
        raise ConfigError("section must be a mapping", location=name)
    _check_keys(section, allowed, name)
    return dict(section)


def _build(location, cls, values):
    try:
        return cls(**values)
    except (ConfigError, InvalidParameters):
        raise
    except InvalidForcing as error:
        raise ConfigError(str(error), location=location)
    except (TypeError, ValueError) as error:
        raise ConfigError(f"invalid value ({error})", location=location)


def parse_override(override: str) -> Tuple[List[str], Any]:
    """Split a ``section.key=value`` override into its key path and value."""
    path, separator, value = override.partition("=")
    keys = path.strip().split(".")
    if not separator or len(keys) < 2 or not all(keys):
        raise ConfigError(
            f"invalid override {override!r}, expected section.key=value"
        )
    try:
        parsed = yaml.safe_load(value)
    except yaml.YAMLError:
        raise ConfigError(f"invalid value in override {override!r}")
    return keys, parsed


def apply_overrides(mapping, overrides: Iterable[str]) -> Dict[str, Any]:
    """Return a copy of the mapping with overrides applied."""
    mapping = copy.deepcopy(mapping) if mapping else {}
    for override in overrides:
        keys, value = parse_override(override)
        target = mapping
        for key in keys[:-1]:
            target = target.setdefault(key, {})
            if not isinstance(target, dict):
                raise ConfigError(
                    "cannot override inside a non-mapping value",
                    location=".".join(keys),
                )
        target[keys[-1]] = value
    return mapping


def read_mapping(path) -> Dict[str, Any]:
    """Read a YAML configuration mapping from file."""
    path = Path(path)
    try:
        with path.open() as fd:
            return yaml.safe_load(fd) or {}
    except FileNotFoundError:
        raise ConfigError("file not found", location=str(path))
    except yaml.YAMLError as error:
        location = str(path)
        mark = getattr(error, "problem_mark", None)
        if mark is not None:
            location = f"{path}:{mark.line + 1}:{mark.column + 1}"
        raise ConfigError(f"invalid YAML ({error})", location=location)


def load_config(path, overrides: Iterable[str] = (), output=None) -> RunConfig:
    """Load a run configuration from a YAML file."""
    mapping = apply_overrides(read_mapping(path), overrides)
    return RunConfig.from_mapping(mapping, output=output)


_REFERENCE_FLUID = {
    "mu": 1.0,
    "lam": 0.0,
    "a": 1.0,
    "gamma": 2.0,
    "k_spring": 1.0,
    "epsilon": 1e-3,
    "delta": 1e-4,
    "length": 1.0,
    "n_modes": 16,
    "n_cells": 256,
    "dt": 1e-4,
}

#: Built-in presets, as configuration mappings.
PRESETS: Dict[str, Dict[str, Any]] = {
    "equilibrium": {
        "fluid": dict(_REFERENCE_FLUID),
        "run": {"t_end": 1.0},
    },
    "free-decay": {
        "fluid": dict(_REFERENCE_FLUID),
        "initial": {"b0": 0.1},
        "run": {"t_end": 20.0},
    },
    "forced": {
        "fluid": dict(_REFERENCE_FLUID),
        "forcing": {"kind": "sinusoid", "amplitude": 0.1, "omega": 2.0},
        "run": {"t_end": 20.0},
    },
    "resonance": {
        "fluid": dict(_REFERENCE_FLUID),
        "forcing": {"kind": "sinusoid", "amplitude": 0.05, "omega": 1.0},
        "run": {"t_end": 20.0},
    },
    "rigid-limit": {
        "fluid": dict(
            _REFERENCE_FLUID,
            a=0.0,
            delta=0.0,
            mu=500.0,
            n_modes=4,
            n_cells=32,
            dt=1e-3,
        ),
        "initial": {"b0": 1.0},
        "run": {"t_end": 10.0},
    },
}


def user_presets_dir() -> Path:
    """Return the directory for user-defined presets."""
    return Path(xdg_config_home) / "fluidspring" / "presets"


def preset_names() -> List[str]:
    """Return names of built-in and user presets."""
    names = set(PRESETS)
    presets_dir = user_presets_dir()
    if presets_dir.is_dir():
        names.update(path.stem for path in presets_dir.glob("*.yaml"))
    return sorted(names)


def preset_mapping(name: str) -> Dict[str, Any]:
    """Return the mapping of a preset; user presets shadow built-in ones."""
    user_preset = user_presets_dir() / f"{name}.yaml"
    if user_preset.exists():
        return read_mapping(user_preset)
    try:
        return copy.deepcopy(PRESETS[name])
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}, available: {', '.join(preset_names())}"
        )


def load_preset(name: str, overrides: Iterable[str] = (), output=None) -> RunConfig:
    """Load a preset configuration."""
    mapping = apply_overrides(preset_mapping(name), overrides)
    return RunConfig.from_mapping(mapping, output=output)
