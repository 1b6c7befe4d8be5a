"""Shared helpers for building CheckReports."""

import math
from collections.abc import Sequence
from typing import Any

import numpy as np

from ..types import CheckReport, CheckStatus

# Slack on fitted exponents that carry an epsilon loss
SLOPE_SLACK = 0.2
# Fewer dyadic points than this makes a fit INCONCLUSIVE
MIN_FIT_POINTS = 3


def fit_loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    """Least-squares slope of log y against log x.

    Points with non-positive or non-finite coordinates are dropped.

    Returns:
        Slope, or None with fewer than MIN_FIT_POINTS usable points
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    usable = np.isfinite(x) & np.isfinite(y) & (x > 0) & (y > 0)
    if int(np.count_nonzero(usable)) < MIN_FIT_POINTS:
        return None
    slope, _ = np.polyfit(np.log(x[usable]), np.log(y[usable]), 1)
    return float(slope)


def pass_fail(ok: bool) -> CheckStatus:
    return "PASS" if ok else "FAIL"


def combine_status(*statuses: CheckStatus) -> CheckStatus:
    """FAIL beats INCONCLUSIVE beats PASS."""
    if "FAIL" in statuses:
        return "FAIL"
    if "INCONCLUSIVE" in statuses:
        return "INCONCLUSIVE"
    return "PASS"


def json_safe(value: Any) -> Any:
    """Replace non-finite floats so reports serialize as strict JSON."""
    if isinstance(value, dict):
        return {str(key): json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(item) for item in value]
    if isinstance(value, (np.floating, np.integer)):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        if math.isnan(value):
            return None
        return "inf" if value > 0 else "-inf"
    return value


def _finite_or_none(value: float | None) -> float | None:
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


def make_report(
    name: str,
    status: CheckStatus,
    *,
    hard: bool = True,
    inputs: dict[str, Any] | None = None,
    measured: dict[str, Any] | None = None,
    bound_lhs: float | None = None,
    bound_rhs: float | None = None,
    ratio: float | None = None,
    slope: float | None = None,
    tolerance: float | None = None,
    notes: list[str] | None = None,
) -> CheckReport:
    """Build a CheckReport with JSON-safe payloads."""
    return CheckReport(
        name=name,
        status=status,
        hard=hard,
        inputs=json_safe(inputs or {}),
        measured=json_safe(measured or {}),
        bound_lhs=_finite_or_none(bound_lhs),
        bound_rhs=_finite_or_none(bound_rhs),
        ratio=_finite_or_none(ratio),
        slope=_finite_or_none(slope),
        tolerance=_finite_or_none(tolerance),
        notes=list(notes or []),
    )
