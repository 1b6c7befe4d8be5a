"""Executable checks of the estimates, identities and bookkeeping around the I-method."""

from .base import MIN_FIT_POINTS, SLOPE_SLACK, fit_loglog_slope
from .conservation import (
    SweepAccumulator,
    almost_conservation_points,
    check_energy_order,
    check_exact_plane_wave,
    check_mass_conservation,
    check_reversibility,
    observe_sweep,
    summarize_sweep,
    sweep_almost_conservation,
)
from .estimates import check_frequency_tail, check_smoothness_decay, frequency_tail_constant
from .morawetz import check_almost_morawetz, check_interaction_morawetz, sweep_almost_morawetz
from .registry import CHECK_RUNNERS, CheckContext, get_check_runners
from .scaling import (
    check_scaling,
    find_lambda,
    partition_by_norm,
    rescale_experiment,
    rescale_trajectory,
    scaled_step_config,
    scaling_map,
)

__all__ = [
    "CHECK_RUNNERS",
    "MIN_FIT_POINTS",
    "SLOPE_SLACK",
    "CheckContext",
    "SweepAccumulator",
    "almost_conservation_points",
    "check_almost_morawetz",
    "check_energy_order",
    "check_exact_plane_wave",
    "check_frequency_tail",
    "check_interaction_morawetz",
    "check_mass_conservation",
    "check_reversibility",
    "check_scaling",
    "check_smoothness_decay",
    "find_lambda",
    "fit_loglog_slope",
    "frequency_tail_constant",
    "get_check_runners",
    "observe_sweep",
    "partition_by_norm",
    "rescale_experiment",
    "rescale_trajectory",
    "scaled_step_config",
    "scaling_map",
    "summarize_sweep",
    "sweep_almost_conservation",
    "sweep_almost_morawetz",
]
