"""Tests for the interaction and almost Morawetz checks."""

import math

import numpy as np
import pytest

from imethod_lab.checks.morawetz import (
    check_almost_morawetz,
    check_interaction_morawetz,
    sweep_almost_morawetz,
)
from imethod_lab.dynamics import evolve
from imethod_lab.initial_data import gaussian, plane_wave, rough_data
from imethod_lab.spectral import make_grid
from imethod_lab.types import Field, RoughDataSpec, StepConfig


@pytest.fixture(scope="module")
def gaussian_trajectory():
    """Real Gaussian of width 2 in 3D, dispersing until t = 0.5."""
    grid = make_grid(3, 32, 8 * math.pi)
    return evolve(gaussian(grid, 1.0, 2.0), StepConfig(dt=0.05, t_final=0.5), 3)


@pytest.fixture(scope="module")
def zero_trajectory():
    grid = make_grid(3, 8, 2 * math.pi)
    zero = Field(grid=grid, values=np.zeros(grid.shape))
    return evolve(zero, StepConfig(dt=0.1, t_final=0.2), 3)


def test_interaction_morawetz_on_gaussian():
    grid = make_grid(3, 32, 8 * math.pi)
    traj = evolve(gaussian(grid), StepConfig(dt=0.01, t_final=1.0, snapshot_stride=5), 3)
    report = check_interaction_morawetz(traj)
    assert report.status == "PASS"
    assert 0 < report.ratio <= 10
    assert report.measured["time_weighted_ratio"] > 0


def test_interaction_morawetz_on_smoothed_trajectory(gaussian_trajectory):
    report = check_interaction_morawetz(gaussian_trajectory, N=0.5, s=0.5)
    assert report.status == "PASS"
    assert report.inputs["N"] == 0.5


def test_interaction_morawetz_plane_wave_is_finite():
    grid = make_grid(3, 8, 2 * math.pi)
    traj = evolve(plane_wave(grid, 1.0, (1.0, 0.0, 0.0)), StepConfig(dt=0.1, t_final=0.5), 3)
    report = check_interaction_morawetz(traj, budget=1e6)
    assert report.ratio is not None and math.isfinite(report.ratio)


def test_interaction_morawetz_zero_data(zero_trajectory):
    report = check_interaction_morawetz(zero_trajectory)
    assert report.status == "PASS"
    assert "trivially" in report.notes[0]


def test_interaction_morawetz_rejects_low_dimension():
    grid = make_grid(2, 16, 2 * math.pi)
    traj = evolve(gaussian(grid), StepConfig(dt=0.1, t_final=0.1), 2)
    with pytest.raises(ValueError, match="n in"):
        check_interaction_morawetz(traj)


def test_almost_morawetz_zero_data(zero_trajectory):
    report = check_almost_morawetz(zero_trajectory, N=1.0, s=0.5)
    assert report.status == "PASS"
    assert report.measured["A"] == 0.0
    assert report.measured["B"] == 0.0


def test_almost_morawetz_on_dispersing_gaussian(gaussian_trajectory):
    """Real data starts with M = 0 and acquires outgoing momentum."""
    report = check_almost_morawetz(gaussian_trajectory, N=0.5, s=0.5)
    assert report.status == "PASS"
    assert report.measured["A"] > 0
    assert report.measured["B"] > 0
    assert abs(report.measured["action_initial"]) <= 1e-12 * report.measured["max_cap"]
    assert report.measured["max_action_over_cap"] <= 1.0
    assert report.measured["defect"] == pytest.approx(report.measured["A"] - report.measured["B"])
    assert not report.measured["is_control"]


def test_almost_morawetz_control_threshold(gaussian_trajectory):
    N = gaussian_trajectory.grid.max_wavenumber * 2
    report = check_almost_morawetz(gaussian_trajectory, N=N, s=0.5)
    assert report.measured["is_control"]


def test_almost_morawetz_defect_budget(gaussian_trajectory):
    report = check_almost_morawetz(gaussian_trajectory, N=0.5, s=0.5, defect_budget=-math.inf)
    assert report.status == "FAIL"
    assert any("exceeds budget" in note for note in report.notes)


def test_almost_morawetz_requires_three_dimensions():
    grid = make_grid(4, 8, 2 * math.pi)
    traj = evolve(gaussian(grid), StepConfig(dt=0.1, t_final=0.1), 4)
    with pytest.raises(ValueError, match="n = 3"):
        check_almost_morawetz(traj, N=1.0, s=0.5)


def test_almost_morawetz_sweep_without_control(gaussian_trajectory):
    report = sweep_almost_morawetz(gaussian_trajectory, [1.0, 0.5], 0.5)
    assert not report.hard
    assert report.status == "INCONCLUSIVE"
    assert report.measured["defect_floor"] is None
    assert any("control" in note for note in report.notes)
    assert report.measured["N"] == [0.5, 1.0]
    assert len(report.measured["defect"]) == 2


@pytest.mark.parametrize(
    "n, G, L, datum",
    [
        (4, 16, 6.0, "gaussian"),
        (3, 32, 8.0, "rough"),
        (4, 16, 6.0, "rough"),
    ],
)
def test_interaction_morawetz_across_data(n, G, L, datum):
    grid = make_grid(n, G, L)
    if datum == "gaussian":
        u0 = gaussian(grid, 1.0, 1.0)
    else:
        u0 = rough_data(grid, RoughDataSpec(s=0.6, amplitude=1.0, envelope_width=1.2, seed=0))
    traj = evolve(u0, StepConfig(dt=1e-3, t_final=0.2, snapshot_stride=10), n)
    report = check_interaction_morawetz(traj)
    assert report.status == "PASS"
    assert 0 < report.ratio <= 10


@pytest.fixture(scope="module")
def rough_trajectory():
    """Localized rough datum whose spectrum reaches past N = 32."""
    grid = make_grid(3, 32, 4.0)
    u0 = rough_data(grid, RoughDataSpec(s=0.5, amplitude=1.0, envelope_width=1.0, seed=0))
    return evolve(u0, StepConfig(dt=1e-3, t_final=0.02, snapshot_stride=2), 3)


def test_almost_morawetz_error_shrinks_toward_control(rough_trajectory):
    """|D(N) - D(control)| falls across N = 8, 16, 32 with a negative fitted slope."""
    assert rough_trajectory.grid.max_wavenumber > 32
    report = sweep_almost_morawetz(rough_trajectory, [8.0, 16.0, 32.0, 100.0], 0.5)
    assert not report.hard
    assert report.measured["active_N"] == [8.0, 16.0, 32.0]
    assert report.measured["is_control"] == [False, False, False, True]
    assert report.measured["defect_floor"] == report.measured["defect"][-1]

    error = report.measured["defect_error"]
    assert error[0] > error[1] > error[2]
    assert report.slope is not None and report.slope < 0
    assert report.status == "PASS"

    assert all(report.measured["cap_respected"])
    assert all(0 <= value <= 1 for value in report.measured["max_action_over_cap"])
    assert report.measured["positive_defect"] == [max(d, 0.0) for d in report.measured["defect"]]


def test_almost_morawetz_sweep_on_gaussian_against_control(gaussian_trajectory):
    report = sweep_almost_morawetz(gaussian_trajectory, [0.5, 1.0, 2.0, 100.0], 0.5)
    error = report.measured["defect_error"]
    assert error == sorted(error, reverse=True)
    assert report.status == "PASS"
