"""Check name -> runner table used by the `check` command.

Runners read their parameters from the run config and the CheckSpec; they
never touch the filesystem.
"""

import logging
import math
from collections.abc import Callable
from functools import cached_property
from typing import TYPE_CHECKING, Any

from ..dynamics import evolve
from ..initial_data import synthesize_initial_data
from ..types import CheckReport, Field, Trajectory
from .conservation import (
    check_energy_order,
    check_exact_plane_wave,
    check_mass_conservation,
    check_reversibility,
    observe_sweep,
    summarize_sweep,
)
from .estimates import check_frequency_tail, check_smoothness_decay
from .morawetz import check_almost_morawetz, check_interaction_morawetz, sweep_almost_morawetz
from .scaling import check_scaling, partition_by_norm, rescale_experiment

if TYPE_CHECKING:
    from ..config import CheckSpec, RunConfig

logger = logging.getLogger(__name__)

DEFAULT_REVERSIBILITY_STEPS = 100

CheckRunner = Callable[["CheckContext", "CheckSpec"], CheckReport]


class CheckContext:
    """Shared inputs for the checks of one run.

    The reference trajectory is evolved on first use and reused by every
    check that needs it.
    """

    def __init__(self, config: "RunConfig", initial: Field | None = None) -> None:
        """Initialize context.

        Args:
            config: Validated run configuration
            initial: Initial datum (synthesized from the config when omitted)
        """
        self.config = config
        self.grid = config.grid()
        self.initial = initial if initial is not None else synthesize_initial_data(config.initial_data, self.grid)

    @cached_property
    def trajectory(self) -> Trajectory:
        return evolve(self.initial, self.config.step_config(), self.grid.n)

    def threshold(self, spec: "CheckSpec") -> float:
        N = spec.params.get("N", self.config.N)
        if N is None:
            thresholds = self.config.thresholds()
            if not thresholds:
                raise ValueError(f"check {spec.name!r} requires N")
            N = thresholds[0]
        return float(N)

    def regularity(self, spec: "CheckSpec") -> float:
        s = spec.params.get("s", self.config.s)
        if s is None:
            raise ValueError(f"check {spec.name!r} requires s")
        return float(s)

    def thresholds(self, spec: "CheckSpec") -> list[float]:
        thresholds = spec.params.get("N_list") or self.config.thresholds()
        if not thresholds:
            raise ValueError(f"check {spec.name!r} requires N_list")
        return sorted(float(N) for N in thresholds)


def _kwargs(**values: Any) -> dict[str, Any]:
    return {key: value for key, value in values.items() if value is not None}


def run_mass_conservation(ctx: CheckContext, spec: "CheckSpec") -> CheckReport:
    return check_mass_conservation(ctx.trajectory, **_kwargs(tolerance=spec.tolerance))


def run_energy_order(ctx: CheckContext, spec: "CheckSpec") -> CheckReport:
    dt = ctx.config.dt
    dts = spec.params.get("dts", [dt, dt / 2, dt / 4, dt / 8])
    t_final = spec.params.get("t_final", ctx.config.t_final)
    return check_energy_order(ctx.initial, ctx.grid.n, dts, t_final)


def run_reversibility(ctx: CheckContext, spec: "CheckSpec") -> CheckReport:
    steps = int(spec.params.get("steps", DEFAULT_REVERSIBILITY_STEPS))
    return check_reversibility(
        ctx.initial, ctx.grid.n, ctx.config.dt, steps, **_kwargs(tolerance=spec.tolerance)
    )


def run_exact_plane_wave(ctx: CheckContext, spec: "CheckSpec") -> CheckReport:
    data = ctx.config.initial_data
    if data.kind != "plane_wave":
        raise ValueError("exact_plane_wave requires plane_wave initial data")
    return check_exact_plane_wave(
        ctx.grid,
        data.amplitude,
        data.wavevector,
        ctx.config.step_config(),
        **_kwargs(tolerance=spec.tolerance),
    )


def run_frequency_tail(ctx: CheckContext, spec: "CheckSpec") -> CheckReport:
    N = ctx.threshold(spec)
    M = float(spec.params.get("M", 2.0 * N))
    return check_frequency_tail(ctx.initial, N, ctx.regularity(spec), M)


def run_smoothness_decay(ctx: CheckContext, spec: "CheckSpec") -> CheckReport:
    N = ctx.threshold(spec)
    M_list = spec.params.get("M_list")
    if M_list is None:
        M_list = [N * 2.0**k for k in range(-3, 12) if N * 2.0**k <= ctx.grid.max_wavenumber]
    return check_smoothness_decay(ctx.initial, N, ctx.regularity(spec), M_list)


def run_interaction_morawetz(ctx: CheckContext, spec: "CheckSpec") -> CheckReport:
    N = spec.params.get("N")
    s = ctx.regularity(spec) if N is not None else None
    return check_interaction_morawetz(ctx.trajectory, N, s, **_kwargs(budget=spec.budget))


def run_almost_morawetz(ctx: CheckContext, spec: "CheckSpec") -> CheckReport:
    return check_almost_morawetz(
        ctx.trajectory, ctx.threshold(spec), ctx.regularity(spec), defect_budget=spec.budget
    )


def run_almost_morawetz_sweep(ctx: CheckContext, spec: "CheckSpec") -> CheckReport:
    return sweep_almost_morawetz(
        ctx.trajectory, ctx.thresholds(spec), ctx.regularity(spec), defect_budget=spec.budget
    )


def run_scaling(ctx: CheckContext, spec: "CheckSpec") -> CheckReport:
    lam = int(spec.params.get("lambda", ctx.config.lam or 2))
    return check_scaling(ctx.trajectory, lam, **_kwargs(tolerance=spec.tolerance))


def run_partition(ctx: CheckContext, spec: "CheckSpec") -> CheckReport:
    n = ctx.grid.n
    default_p, default_q = (8.0 / 3.0, 4.0) if n == 3 else (math.inf, 2.0)
    p = float(spec.params.get("p", default_p))
    q = float(spec.params.get("q", default_q))
    eps = spec.params.get("eps", spec.budget)
    if eps is None:
        raise ValueError("partition requires params.eps or budget")
    lam = float(spec.params.get("lambda", ctx.config.lam or 1))
    _, report = partition_by_norm(ctx.trajectory, p, q, float(eps), lam)
    return report


def run_rescale(ctx: CheckContext, spec: "CheckSpec") -> CheckReport:
    return rescale_experiment(
        ctx.initial,
        ctx.regularity(spec),
        ctx.thresholds(spec),
        ctx.config.t_final,
        **_kwargs(target=spec.params.get("target")),
    )


def run_almost_conservation(ctx: CheckContext, spec: "CheckSpec") -> CheckReport:
    s = ctx.regularity(spec)
    stride = int(spec.params.get("observe_stride", 1))
    cfg = ctx.config.step_config().model_copy(update={"snapshot_stride": stride})
    points = observe_sweep(ctx.initial, cfg, ctx.thresholds(spec), s)
    inputs = {
        "s": s,
        "G": ctx.grid.G,
        "L": ctx.grid.L,
        "n": ctx.grid.n,
        "dt": ctx.config.dt,
        "observe_stride": stride,
    }
    return summarize_sweep(points, inputs)


CHECK_RUNNERS: dict[str, CheckRunner] = {
    "mass_conservation": run_mass_conservation,
    "energy_order": run_energy_order,
    "reversibility": run_reversibility,
    "exact_plane_wave": run_exact_plane_wave,
    "frequency_tail": run_frequency_tail,
    "smoothness_decay": run_smoothness_decay,
    "interaction_morawetz": run_interaction_morawetz,
    "almost_morawetz": run_almost_morawetz,
    "almost_morawetz_sweep": run_almost_morawetz_sweep,
    "scaling": run_scaling,
    "partition": run_partition,
    "rescale": run_rescale,
    "almost_conservation": run_almost_conservation,
}


def get_check_runners(names: list[str] | None = None) -> dict[str, CheckRunner]:
    """Get check runners by name, preserving the requested order.

    Args:
        names: Check names (all checks when None)

    Returns:
        Dictionary mapping check names to runners

    Raises:
        KeyError: If a name is not registered
    """
    if names is None:
        return dict(CHECK_RUNNERS)
    unknown = [name for name in names if name not in CHECK_RUNNERS]
    if unknown:
        raise KeyError(f"Unknown checks: {', '.join(unknown)}")
    return {name: CHECK_RUNNERS[name] for name in names}
