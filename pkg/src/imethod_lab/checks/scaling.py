"""L2-critical scaling, smallness partitions and lambda selection.

The lattice dilation u -> u_lam keeps the Fourier coefficient of index k at
index k on the (G*lam, L*lam) grid, scaled by lam^(n/2). That is the exact
dilation lam^(-n/2) u(x/lam) of the trigonometric interpolant, so mass and
every homogeneous Sobolev norm transform exactly.
"""

import logging
import math
from collections.abc import Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from ..dynamics import evolve
from ..functionals import admissible_pairs, mass, modified_energy, spacetime_norm
from ..spectral import lebesgue_norm, sobolev_norm, transform_forward, transform_inverse
from ..types import AdmissiblePair, CheckReport, Field, Grid, SpectralField, StepConfig, Trajectory
from .base import fit_loglog_slope, make_report, pass_fail

logger = logging.getLogger(__name__)

SCALING_TOLERANCE = 1e-6
SCALING_MASS_TOLERANCE = 1e-12
MODIFIED_ENERGY_TARGET = 0.5
LAMBDA_CAP = 2**16
LAMBDA_SLOPE_TOLERANCE = 0.3
BISECTION_STEPS = 60
# Largest dilated lattice the direct lambda cross-check will build
CROSS_CHECK_MAX_POINTS = 2**22
CROSS_CHECK_TOLERANCE = 1e-8


def _require_power_of_two(lam: int) -> None:
    if not isinstance(lam, (int, np.integer)) or lam < 1 or lam & (lam - 1):
        raise ValueError(f"lambda must be a positive power of two, got {lam}")


def scaling_map(u: Field, lam: int) -> Field:
    """lam^(-n/2) u(x/lam) on the (G*lam, L*lam) grid; dx is unchanged.

    Raises:
        ValueError: If lam is not a power of two
    """
    _require_power_of_two(lam)
    if lam == 1:
        return u
    grid = u.grid
    target = Grid(n=grid.n, G=grid.G * lam, L=grid.L * lam)
    indices = np.fft.fftfreq(grid.G, 1.0 / grid.G).astype(int) % target.G
    coeffs = np.zeros(target.shape, dtype=complex)
    coeffs[np.ix_(*(indices,) * grid.n)] = transform_forward(u).coeffs * lam ** (grid.n / 2.0)
    return transform_inverse(SpectralField(grid=target, coeffs=coeffs))


def scaled_step_config(cfg: StepConfig, lam: int) -> StepConfig:
    """Same snapshots in rescaled time: dt and t_final multiplied by lam^2."""
    return cfg.model_copy(update={"dt": cfg.dt * lam**2, "t_final": cfg.t_final * lam**2})


def rescale_trajectory(traj: Trajectory, lam: int) -> Trajectory:
    """Evolve the dilated initial datum over the rescaled horizon."""
    return evolve(scaling_map(traj.initial, lam), scaled_step_config(traj.config, lam), traj.n)


def check_scaling(
    traj: Trajectory,
    lam: int,
    pairs: Sequence[AdmissiblePair] | None = None,
    tolerance: float = SCALING_TOLERANCE,
    scaled: Trajectory | None = None,
    s: float = 0.5,
) -> CheckReport:
    """Compare spacetime norms of a trajectory and its lam-rescaled twin.

    Args:
        traj: Unscaled trajectory
        lam: Power-of-two dilation factor
        pairs: Pairs to compare (default: admissible_pairs(n) for n in {3, 4},
            else only (inf, 2))
        tolerance: Relative tolerance on each norm ratio
        scaled: Precomputed rescaled trajectory, evolved here when omitted
        s: Order of the recorded homogeneous Sobolev relation

    Returns:
        CheckReport with per-pair ratios
    """
    _require_power_of_two(lam)
    n = traj.n
    if pairs is None:
        pairs = admissible_pairs(n) if n in (3, 4) else [AdmissiblePair(p=math.inf, q=2.0, n=n)]
    if scaled is None:
        scaled = rescale_trajectory(traj, lam)

    mass_ratio = mass(scaled.initial) / mass(traj.initial) if mass(traj.initial) > 0 else 1.0
    ratios: dict[str, float] = {}
    for pair in pairs:
        original = spacetime_norm(traj, pair.p, pair.q).value
        rescaled = spacetime_norm(scaled, pair.p, pair.q).value
        ratios[pair.label] = rescaled / original if original > 0 else 1.0
    sobolev_original = sobolev_norm(traj.initial, s)
    sobolev_scaled = sobolev_norm(scaled.initial, s)
    sobolev_ratio = lam**s * sobolev_scaled / sobolev_original if sobolev_original > 0 else 1.0

    worst = max(abs(ratio - 1.0) for ratio in ratios.values())
    ok = worst <= tolerance and abs(mass_ratio - 1.0) <= SCALING_MASS_TOLERANCE
    return make_report(
        "scaling",
        pass_fail(ok),
        inputs={"lambda": lam, "pairs": [pair.label for pair in pairs], "s": s},
        measured={
            "mass_ratio": mass_ratio,
            "norm_ratios": ratios,
            "sobolev_ratio": sobolev_ratio,
            "max_relative_deviation": worst,
        },
        ratio=worst,
        tolerance=tolerance,
    )


def partition_by_norm(
    traj: Trajectory,
    p: float,
    q: float,
    eps: float,
    lam: float = 1.0,
) -> tuple[list[tuple[float, float]], CheckReport]:
    """Greedy left-to-right split of [0, T] into maximal intervals with L_t^p L_x^q norm <= eps.

    Adjacent intervals share endpoints. The count is compared with the
    bookkeeping scale lam^(2/3) T^(1/3) as a recorded ratio.

    Raises:
        ValueError: If eps <= 0 or a single snapshot step already exceeds eps
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    times = traj.time_array()
    space = np.array([lebesgue_norm(state, q) for state in traj.states])
    intervals: list[tuple[float, float]] = []

    if math.isinf(p):
        if np.any(space > eps):
            raise ValueError(f"eps={eps} below the single-snapshot norm {float(np.max(space)):.6g}")
        intervals.append((float(times[0]), float(times[-1])))
        total = float(np.max(space))
    else:
        budget = eps**p
        accumulated = cumulative_trapezoid(space**p, times, initial=0.0)
        largest_step = float(np.max(np.diff(accumulated))) if times.size > 1 else 0.0
        if largest_step > budget:
            raise ValueError(
                f"eps={eps} below the single-step norm {largest_step ** (1.0 / p):.6g}; cannot partition"
            )
        start = 0
        for index in range(1, times.size):
            if accumulated[index] - accumulated[start] > budget:
                intervals.append((float(times[start]), float(times[index - 1])))
                start = index - 1
        intervals.append((float(times[start]), float(times[-1])))
        total = float(accumulated[-1]) ** (1.0 / p)

    count = len(intervals)
    scale = lam ** (2.0 / 3.0) * float(times[-1]) ** (1.0 / 3.0)
    report = make_report(
        "partition",
        "PASS",
        hard=False,
        inputs={"p": p, "q": q, "eps": eps, "lambda": lam, "t_final": float(times[-1])},
        measured={
            "count": count,
            "total_norm": total,
            "bookkeeping_scale": scale,
            "intervals": [list(interval) for interval in intervals],
        },
        ratio=count / scale if scale > 0 else None,
    )
    logger.info(f"Partitioned [0, {times[-1]:g}] into {count} interval(s) at eps={eps:g}")
    return intervals, report


def _dilated_modified_energy(u0: Field, N: float, s: float, lam: float) -> float:
    # E(I_N u_lam) = lam^-2 E(I_{lam N} u)
    return modified_energy(u0, lam * N, s, u0.grid.n) / lam**2


def find_lambda(
    u0: Field,
    N: float,
    s: float,
    target: float = MODIFIED_ENERGY_TARGET,
    cap: int = LAMBDA_CAP,
) -> tuple[int, float] | None:
    """Smallest lambda with E(I_N u0_lambda) <= target.

    Returns:
        (power-of-two lambda, bisection-refined continuous lambda), or None if
        no lambda up to `cap` works
    """
    lam = 1
    while _dilated_modified_energy(u0, N, s, lam) > target:
        lam *= 2
        if lam > cap:
            return None
    if lam == 1:
        return 1, 1.0
    low, high = math.log(lam / 2), math.log(lam)
    for _ in range(BISECTION_STEPS):
        middle = 0.5 * (low + high)
        if _dilated_modified_energy(u0, N, s, math.exp(middle)) > target:
            low = middle
        else:
            high = middle
    return lam, math.exp(high)


def cross_check_lambda(u0: Field, N: float, s: float, lam: int) -> dict[str, float]:
    """E(I_N u0_lam) evaluated on the dilated lattice against lam^-2 E(I_{lam N} u0).

    Raises:
        ValueError: If lam is not a power of two
    """
    direct = modified_energy(scaling_map(u0, lam), N, s, u0.grid.n)
    dilated = _dilated_modified_energy(u0, N, s, lam)
    scale = max(abs(direct), abs(dilated))
    return {
        "N": N,
        "lambda": lam,
        "direct": direct,
        "dilated": dilated,
        "relative_difference": abs(direct - dilated) / scale if scale > 0 else 0.0,
    }


def rescale_experiment(
    u0: Field,
    s: float,
    N_list: Sequence[float],
    T0: float,
    target: float = MODIFIED_ENERGY_TARGET,
    cap: int = LAMBDA_CAP,
) -> CheckReport:
    """Measure lambda(N) against the predicted growth N^((1-s)/s).

    Raises:
        ValueError: If s is outside (0, 1]
    """
    if not 0 < s <= 1:
        raise ValueError(f"s must lie in (0, 1], got {s}")
    thresholds = sorted(float(N) for N in N_list)
    expected = (1.0 - s) / s
    powers: list[int | None] = []
    continuous: list[float | None] = []
    notes = []
    for N in thresholds:
        found = find_lambda(u0, N, s, target, cap)
        if found is None:
            notes.append(f"no lambda <= {cap} reaches E(Iu) <= {target} at N={N:g}")
            powers.append(None)
            continuous.append(None)
        else:
            powers.append(found[0])
            continuous.append(found[1])

    measured = {
        "N": thresholds,
        "lambda": powers,
        "lambda_continuous": continuous,
        "horizon": [lam**2 * T0 if lam is not None else None for lam in continuous],
        "expected_slope": expected,
    }
    found_pairs = [(N, lam) for N, lam in zip(thresholds, powers) if lam is not None]
    measured["lambda_cross_check"] = None
    if found_pairs:
        N, lam = found_pairs[0]
        points = (u0.grid.G * lam) ** u0.grid.n
        if points <= CROSS_CHECK_MAX_POINTS:
            check = cross_check_lambda(u0, N, s, lam)
            measured["lambda_cross_check"] = check
            if check["relative_difference"] > CROSS_CHECK_TOLERANCE:
                notes.append(
                    f"direct E(I_N u_lam) at N={N:g}, lambda={lam} differs from the dilation identity "
                    f"by {check['relative_difference']:.3g}"
                )
        else:
            logger.info(f"Skipping lambda cross-check: dilated lattice would hold {points} points")
    inputs = {"s": s, "N_list": thresholds, "T0": T0, "target": target, "cap": cap}
    if notes:
        return make_report("rescale", "FAIL", inputs=inputs, measured=measured, notes=notes)

    slope = fit_loglog_slope(thresholds, continuous)
    if slope is None:
        status = "INCONCLUSIVE"
        notes.append("slope needs at least 3 values of N")
    else:
        status = pass_fail(abs(slope - expected) <= LAMBDA_SLOPE_TOLERANCE)
    return make_report(
        "rescale",
        status,
        inputs=inputs,
        measured=measured,
        slope=slope,
        tolerance=LAMBDA_SLOPE_TOLERANCE,
        notes=notes,
    )
