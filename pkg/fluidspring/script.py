"""Command line interface.

The ``fluidspring`` command has the following subcommands:

- ``simulate``: run a configuration or preset and write its trajectory file;
- ``rigid``: tabulate the rigid-body reference solutions;
- ``verify``: check a trajectory file against the weak equations, the energy
  inequality and the conservation laws;
- ``sweep``: run a parameter sweep and write its metrics table.

Exit codes are 0 on success, 1 on invalid input or failed verification, and
2 when a simulation fails (its partial trajectory is still written).

"""

import argparse
import asyncio
from concurrent.futures import (
    ProcessPoolExecutor,
    ThreadPoolExecutor,
)
import csv
import logging
from pathlib import Path
import sys

from toolrack.log import (
    Loggable,
    setup_logger,
)
from toolrack.script import Script
import yaml

from . import __version__
from .config import (
    ConfigError,
    RunConfig,
    apply_overrides,
    load_config,
    load_preset,
    preset_names,
)
from .diagnostics import (
    SupportMismatch,
    verify_trajectory,
)
from .forcing import ForcingSignal
from .model import InvalidParameters
from .rigid import (
    RigidParams,
    rigid_closed_form,
    rigid_ode,
)
from .solver.basis import BasisConfigurationError
from .solver.integrator import Integrator
from .storage import (
    TrajectoryFormatError,
    format_number,
    read_trajectory,
    write_trajectory,
)
from .sweep import (
    SweepRunner,
    load_sweep,
    pairwise_sup_differences,
    write_metrics,
)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUN_FAILED = 2

#: Errors reported as invalid input.
INPUT_ERRORS = (
    BasisConfigurationError,
    ConfigError,
    InvalidParameters,
    SupportMismatch,
    TrajectoryFormatError,
)


class FluidSpringScript(Script, Loggable):
    """The ``fluidspring`` command."""

    def main(self, args) -> int:
        if args.command is None:
            self.get_parser().print_usage(self._stderr)
            return EXIT_INVALID
        setup_logger(stream=self._stderr, level=getattr(logging, args.log_level))
        try:
            return args.handler(args)
        except INPUT_ERRORS as error:
            self._stderr.write(f"error: {error}\n")
            return EXIT_INVALID

    def get_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(
            prog="fluidspring",
            description="Compressible fluid in a spring-driven container.",
        )
        parser.add_argument(
            "--version", action="version", version=f"%(prog)s {__version__}"
        )
        parser.add_argument(
            "--log-level",
            default="WARNING",
            choices=["DEBUG", "INFO", "WARNING", "ERROR"],
            help="logging level on stderr",
        )
        subparsers = parser.add_subparsers(dest="command")

        simulate = subparsers.add_parser("simulate", help="run a simulation")
        source = simulate.add_mutually_exclusive_group(required=True)
        source.add_argument("config", nargs="?", help="configuration file")
        source.add_argument(
            "--preset", help=f"preset name ({', '.join(preset_names())})"
        )
        source.add_argument(
            "--replay", metavar="TRAJECTORY", help="re-run a trajectory file"
        )
        simulate.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="SECTION.KEY=VALUE",
            help="override a configuration value",
        )
        simulate.add_argument(
            "-o", "--output", default="trajectory.csv", help="trajectory file"
        )
        simulate.set_defaults(handler=self.simulate)

        rigid = subparsers.add_parser("rigid", help="rigid-body reference")
        rigid.add_argument("--k", type=float, default=1.0, help="spring stiffness")
        rigid.add_argument("--mass", type=float, default=1.0, help="total mass")
        rigid.add_argument("--amplitude", type=float, default=1.0)
        rigid.add_argument("--omega", type=float, default=1.0)
        rigid.add_argument("--phase", type=float, default=0.0)
        initial = rigid.add_mutually_exclusive_group()
        initial.add_argument(
            "--initial",
            type=float,
            nargs=2,
            metavar=("B0", "BETA0"),
            default=(0.0, 0.0),
            help="initial displacement and velocity",
        )
        initial.add_argument(
            "--constants",
            type=float,
            nargs=2,
            metavar=("C1", "C2"),
            help="homogeneous solution constants",
        )
        rigid.add_argument("--t-end", type=float, default=10.0)
        rigid.add_argument("--dt", type=float, default=1e-4)
        rigid.add_argument(
            "--every", type=int, default=100, help="output every N steps"
        )
        rigid.set_defaults(handler=self.rigid)

        verify = subparsers.add_parser("verify", help="verify a trajectory")
        verify.add_argument("trajectory", help="trajectory file")
        verify.add_argument("--weak-tol", type=float, default=1e-3)
        verify.add_argument("--mass-tol", type=float, default=1e-10)
        verify.add_argument(
            "--energy-tol",
            type=float,
            help="relative energy tolerance (default from the run)",
        )
        verify.add_argument("--report", help="write a YAML report to file")
        verify.set_defaults(handler=self.verify)

        sweep = subparsers.add_parser("sweep", help="run a parameter sweep")
        sweep.add_argument("sweep_file", help="sweep file")
        sweep.add_argument(
            "-o", "--output", help="metrics CSV file (default stdout)"
        )
        sweep.add_argument(
            "--workers", type=int, default=1, help="number of worker processes"
        )
        sweep.add_argument("--runs-dir", help="directory for per-run trajectories")
        sweep.set_defaults(handler=self.sweep)
        return parser

    def simulate(self, args) -> int:
        if args.replay:
            config = read_trajectory(args.replay).config
            if args.overrides:
                mapping = apply_overrides(config.echo(), args.overrides)
                config = RunConfig.from_mapping(mapping)
            config = config.replace(output=args.output)
        elif args.preset:
            config = load_preset(args.preset, args.overrides, output=args.output)
        else:
            config = load_config(args.config, args.overrides, output=args.output)
        integrator = Integrator(config.params, config.forcing)
        trajectory = integrator.run(
            config.build_initial_state(integrator.basis),
            config.t_end,
            config.output_every,
        )
        write_trajectory(config.output, config, trajectory)
        if not trajectory.completed:
            self._stderr.write(f"run {trajectory.status}: {trajectory.message}\n")
            return EXIT_RUN_FAILED
        return EXIT_OK

    def rigid(self, args) -> int:
        if args.amplitude == 0:
            forcing = ForcingSignal.zero()
        else:
            forcing = ForcingSignal.sinusoid(args.amplitude, args.omega, args.phase)
        if args.constants:
            params = RigidParams.from_constants(
                args.k, args.mass, forcing, *args.constants
            )
        else:
            params = RigidParams(args.k, args.mass, forcing, *args.initial)
        solution = rigid_ode(params, args.t_end, args.dt)
        b, beta = rigid_closed_form(solution.t, params)
        writer = csv.writer(self._stdout, lineterminator="\n")
        writer.writerow(
            [
                "t",
                "b_closed",
                "beta_closed",
                "b_ode",
                "beta_ode",
                "difference",
                "particular_amplitude",
            ]
        )
        amplitude = params.particular_amplitude
        for index in range(0, len(solution.t), args.every):
            values = (
                solution.t[index],
                b[index],
                beta[index],
                solution.b[index],
                solution.beta[index],
                abs(b[index] - solution.b[index]),
                amplitude,
            )
            writer.writerow([format_number(value) for value in values])
        return EXIT_OK

    def verify(self, args) -> int:
        trajectory_file = read_trajectory(args.trajectory)
        if trajectory_file.config.output_every != 1:
            raise ConfigError(
                "trajectory must be saved at every step (run.output_every = 1)",
                location=args.trajectory,
            )
        checks = verify_trajectory(
            trajectory_file.to_trajectory(),
            weak_tol=args.weak_tol,
            mass_tol=args.mass_tol,
            energy_tol=args.energy_tol,
        )
        for check in checks:
            outcome = "PASS" if check.passed else "FAIL"
            self._stdout.write(
                f"{outcome} {check.name}: {check.value:.6g} "
                f"(tolerance {check.tolerance:.3g})\n"
            )
        passed = all(check.passed for check in checks)
        if args.report:
            report = {
                "trajectory": str(args.trajectory),
                "build": trajectory_file.build_id,
                "passed": passed,
                "checks": {
                    check.name: {
                        "value": float(check.value),
                        "tolerance": float(check.tolerance),
                        "passed": bool(check.passed),
                    }
                    for check in checks
                },
            }
            Path(args.report).write_text(yaml.safe_dump(report, sort_keys=False))
        return EXIT_OK if passed else EXIT_INVALID

    def sweep(self, args) -> int:
        cases = load_sweep(args.sweep_file).cases()
        if args.workers > 1:
            executor = ProcessPoolExecutor(max_workers=args.workers)
        else:
            executor = ThreadPoolExecutor(max_workers=1)
        runs_dir = None
        if args.runs_dir:
            runs_dir = Path(args.runs_dir)
            runs_dir.mkdir(parents=True, exist_ok=True)
        runner = SweepRunner(executor=executor, output_dir=runs_dir)
        try:
            results = asyncio.run(runner.run(cases))
        finally:
            executor.shutdown()
        if args.output:
            with open(args.output, "w", newline="") as fd:
                write_metrics(fd, results)
        else:
            write_metrics(self._stdout, results)
        differences = pairwise_sup_differences(results)
        if differences:
            self.logger.info(
                "pairwise sup differences of b: "
                + ", ".join(format(value, ".3g") for value in differences)
            )
        failed = sum(result.row.status != "completed" for result in results)
        if failed:
            self._stderr.write(f"{failed} of {len(results)} runs failed\n")
        return EXIT_OK


def main():
    sys.exit(FluidSpringScript()())
