"""Experiment orchestration for the evolve, sweep, check and norms commands."""

import logging
from pathlib import Path
from typing import Any

from .checkpoint import load_checkpoint
from .checks.conservation import observe_sweep, summarize_sweep
from .checks.registry import CheckContext, CheckRunner, get_check_runners
from .config import ConfigError, RunConfig
from .dynamics import SolverError, evolve
from .functionals import boundary_mass_fraction, energy, increment_rate, mass, modified_energy
from .initial_data import synthesize_initial_data
from .logging_utils import RunLogger
from .spectral import l2_norm, lebesgue_norm, sobolev_norm
from .types import CheckReport, Field, SweepPoint

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_INTERRUPTED = 130

COMMANDS = ("evolve", "sweep", "check", "norms")

EVOLVE_COLUMNS = (
    "t",
    "mass",
    "kinetic",
    "potential",
    "energy",
    "modified_energy",
    "increment_rate",
    "boundary_mass",
)
NORMS_COLUMNS = (
    "t",
    "mass",
    "l2",
    "linf",
    "kinetic",
    "potential",
    "energy",
    "h_s",
    "h1",
    "modified_energy",
    "increment_rate",
)
SWEEP_COLUMNS = (
    "N",
    "s",
    "G",
    "L",
    "dt",
    "t_final",
    "sup_increment",
    "slope",
    "seed",
    "sup_linear",
    "sup_nonlinear",
)
SUMMARY_COLUMNS = ("name", "status", "ratio", "slope")


def exit_code_for(reports: list[CheckReport]) -> int:
    """Nonzero iff a hard report failed; INCONCLUSIVE never fails a run."""
    return EXIT_FAILED if any(report.hard and report.status == "FAIL" for report in reports) else EXIT_OK


class ExperimentRunner:
    """Runs one command for a validated configuration.

    Each run owns a RunLogger directory; solver aborts are recorded there and
    mapped to EXIT_SOLVER.
    """

    def __init__(self, config: RunConfig) -> None:
        """Initialize runner.

        Args:
            config: Validated run configuration (CLI overrides applied)
        """
        self.config = config
        self.grid = config.grid()

    def run(self, command: str, checkpoint: str | Path | None = None) -> int:
        """Run a command and write its artifacts.

        Args:
            command: One of evolve, sweep, check, norms
            checkpoint: Checkpoint file for `norms`

        Returns:
            Process exit code

        Raises:
            ConfigError: If the command lacks a required parameter
        """
        if command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r} (expected one of {', '.join(COMMANDS)})")
        if command == "norms" and checkpoint is None:
            raise ConfigError("norms requires --checkpoint")
        if command == "sweep" and (not self.config.thresholds() or self.config.s is None):
            raise ConfigError("sweep requires N_list (or N) and s")
        runners = self._check_runners() if command == "check" else {}

        logger.info(f"Starting {command} (config {self.config.config_hash()})")
        run_logger = RunLogger(command, self.config)
        self.run_logger = run_logger
        reports: list[CheckReport] = []
        try:
            if command == "evolve":
                code = self._evolve(run_logger)
            elif command == "sweep":
                code, reports = self._sweep(run_logger)
            elif command == "check":
                code, reports = self._check(run_logger, runners)
            else:
                code = self._norms(run_logger, Path(checkpoint))
        except SolverError as e:
            run_logger.log_error(f"Solver aborted: {e}")
            run_logger.finalize(EXIT_SOLVER, reports)
            return EXIT_SOLVER

        run_logger.finalize(code, reports)
        logger.info(f"{command} finished with exit code {code}. Run artifacts: {run_logger.run_dir}")
        return code

    def _functional_row(self, state: Field, t: float) -> dict[str, Any]:
        n = self.grid.n
        terms = energy(state, n)
        row: dict[str, Any] = {
            "t": t,
            "mass": mass(state),
            "kinetic": terms.kinetic,
            "potential": terms.potential,
            "energy": terms.total,
        }
        N, s = self.config.N, self.config.s
        if N is not None and s is not None:
            row["modified_energy"] = modified_energy(state, N, s, n)
            row["increment_rate"] = increment_rate(state, N, s, n)
        return row

    def _evolve(self, run_logger: RunLogger) -> int:
        initial = synthesize_initial_data(self.config.initial_data, self.grid)
        traj = evolve(initial, self.config.step_config(), self.grid.n)
        rows = []
        for index, (t, state) in enumerate(zip(traj.times, traj.states)):
            run_logger.log_state(index, state, t)
            row = self._functional_row(state, t)
            row["boundary_mass"] = boundary_mass_fraction(state)
            rows.append(row)
        run_logger.write_csv("norms.csv", EVOLVE_COLUMNS, rows)
        worst_boundary = max(row["boundary_mass"] for row in rows)
        if worst_boundary > 1e-3:
            logger.warning(f"Up to {worst_boundary:.3g} of the mass sits near the box faces; consider a larger L")
        return EXIT_OK

    def _sweep(self, run_logger: RunLogger) -> tuple[int, list[CheckReport]]:
        s = self.config.s
        thresholds = self.config.thresholds()
        cached: dict[float, SweepPoint] = {}
        for N in thresholds:
            path = run_logger.run_dir / "points" / f"N_{N:g}.json"
            if path.exists():
                cached[N] = SweepPoint.model_validate_json(path.read_text())
        missing = [N for N in thresholds if N not in cached]
        if missing:
            initial = synthesize_initial_data(self.config.initial_data, self.grid)
            for point in observe_sweep(initial, self.config.step_config(), missing, s):
                run_logger.write_json(f"points/N_{point.N:g}.json", point.model_dump(mode="json"))
                cached[point.N] = point
        else:
            logger.info(f"All {len(thresholds)} sweep points cached; skipping evolution")

        points = [cached[N] for N in thresholds]
        inputs = {
            "s": s,
            "G": self.grid.G,
            "L": self.grid.L,
            "n": self.grid.n,
            "dt": self.config.dt,
            "t_final": self.config.t_final,
            "seed": self.config.initial_data.seed,
            "envelope_width": self.config.initial_data.envelope_width,
            "roughness": self.config.initial_data.roughness,
            "observe_stride": self.config.snapshot_stride,
        }
        report = summarize_sweep(points, inputs)
        run_logger.log_report(report)
        if report.status == "INCONCLUSIVE":
            logger.warning(f"Sweep slope INCONCLUSIVE: {'; '.join(report.notes)}")

        rows = [
            {
                "N": point.N,
                "s": s,
                "G": self.grid.G,
                "L": self.grid.L,
                "dt": self.config.dt,
                "t_final": self.config.t_final,
                "sup_increment": point.sup_increment,
                "slope": report.slope,
                "seed": self.config.initial_data.seed,
                "sup_linear": point.sup_linear,
                "sup_nonlinear": point.sup_nonlinear,
            }
            for point in points
        ]
        run_logger.write_csv("sweep.csv", SWEEP_COLUMNS, rows)
        return exit_code_for([report]), [report]

    def _check_runners(self) -> dict[str, CheckRunner]:
        """Resolve every declared check before any work starts."""
        if not self.config.checks:
            raise ConfigError("check requires at least one entry in checks")
        try:
            return get_check_runners([spec.name for spec in self.config.checks])
        except KeyError as e:
            raise ConfigError(e.args[0]) from e

    def _check(self, run_logger: RunLogger, runners: dict[str, CheckRunner]) -> tuple[int, list[CheckReport]]:
        context = CheckContext(self.config)
        reports: list[CheckReport] = []
        seen: dict[str, int] = {}
        for spec in self.config.checks:
            logger.info(f"Running check {spec.name}")
            try:
                report = runners[spec.name](context, spec)
            except ValueError as e:
                logger.error(f"Check {spec.name} could not run: {e}")
                report = CheckReport(name=spec.name, status="FAIL", notes=[str(e)])
            seen[spec.name] = seen.get(spec.name, 0) + 1
            filename = spec.name if seen[spec.name] == 1 else f"{spec.name}_{seen[spec.name]}"
            run_logger.log_report(report, filename)
            if report.status == "INCONCLUSIVE":
                logger.warning(f"{spec.name} INCONCLUSIVE: {'; '.join(report.notes)}")
            reports.append(report)

        rows = [
            {"name": report.name, "status": report.status, "ratio": report.ratio, "slope": report.slope}
            for report in reports
        ]
        run_logger.write_csv("summary.csv", SUMMARY_COLUMNS, rows)
        return exit_code_for(reports), reports

    def _norms(self, run_logger: RunLogger, checkpoint: Path) -> int:
        state, t = load_checkpoint(checkpoint)
        if state.grid.n != self.grid.n:
            logger.warning(f"Checkpoint dimension {state.grid.n} differs from config dimension {self.grid.n}")
        n = state.grid.n
        terms = energy(state, n)
        row: dict[str, Any] = {
            "t": t,
            "mass": mass(state),
            "l2": l2_norm(state),
            "linf": lebesgue_norm(state, float("inf")),
            "kinetic": terms.kinetic,
            "potential": terms.potential,
            "energy": terms.total,
            "h1": sobolev_norm(state, 1.0, homogeneous=False),
        }
        N, s = self.config.N, self.config.s
        if s is not None:
            row["h_s"] = sobolev_norm(state, s, homogeneous=False)
        if N is not None and s is not None:
            row["modified_energy"] = modified_energy(state, N, s, n)
            row["increment_rate"] = increment_rate(state, N, s, n)
        run_logger.write_csv("norms.csv", NORMS_COLUMNS, [row])
        return EXIT_OK
