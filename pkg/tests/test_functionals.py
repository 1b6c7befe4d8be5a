"""Tests for mass, energy, modified energy, spacetime norms and the Morawetz action."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imethod_lab.dynamics import evolve, nonlinearity
from imethod_lab.functionals import (
    admissible_pairs,
    boundary_mass_fraction,
    energy,
    increment_rate,
    increment_terms,
    linear_increment,
    mass,
    modified_energy,
    momentum_density,
    morawetz_action,
    morawetz_action_bound,
    morawetz_action_direct,
    nonlinear_increment,
    smoothed_trajectory,
    spacetime_norm,
    strichartz_norm,
)
from imethod_lab.initial_data import gaussian, plane_wave, rough_data
from imethod_lab.spectral import apply_i_operator, l2_norm, laplacian, make_grid
from imethod_lab.types import AdmissiblePair, Field, RoughDataSpec, StepConfig

GAUSSIAN_MASS_3D = (math.pi / 2) ** 1.5


@pytest.fixture(scope="module")
def gaussian_grid():
    return make_grid(3, 64, 8 * math.pi)


@pytest.fixture(scope="module")
def unit_plane_wave_trajectory():
    """|u| = 1 plane wave on the 2*pi box, n = 3."""
    grid = make_grid(3, 8, 2 * math.pi)
    u = plane_wave(grid, 1.0, (1.0, 0.0, 0.0))
    return evolve(u, StepConfig(dt=0.1, t_final=1.0), 3)


def test_mass_of_plane_wave():
    grid = make_grid(3, 8, 2 * math.pi)
    assert mass(plane_wave(grid, 1.0, (1.0, 0.0, 0.0))) == pytest.approx((2 * math.pi) ** 3, rel=1e-12)


def test_mass_of_gaussian(gaussian_grid):
    assert mass(gaussian(gaussian_grid)) == pytest.approx(GAUSSIAN_MASS_3D, rel=1e-6)


def test_energy_of_plane_wave():
    """(1/2)|k|^2 |c|^2 L^3 + (3/10)|c|^(10/3) L^3 with c = k = 1."""
    grid = make_grid(3, 8, 2 * math.pi)
    terms = energy(plane_wave(grid, 1.0, (1.0, 0.0, 0.0)), 3)
    assert terms.kinetic == pytest.approx(0.5 * (2 * math.pi) ** 3, rel=1e-12)
    assert terms.potential == pytest.approx(0.3 * (2 * math.pi) ** 3, rel=1e-12)
    assert terms.total == pytest.approx(198.4402, rel=1e-6)


def test_kinetic_energy_of_gaussian(gaussian_grid):
    terms = energy(gaussian(gaussian_grid), 3)
    assert terms.kinetic == pytest.approx(1.5 * GAUSSIAN_MASS_3D, rel=1e-6)


def test_zero_field_functionals():
    grid = make_grid(3, 8, 1.0)
    zero = Field(grid=grid, values=np.zeros(grid.shape))
    assert mass(zero) == 0.0
    assert energy(zero, 3).total == 0.0
    assert morawetz_action(zero) == 0.0
    assert boundary_mass_fraction(zero) == 0.0


def test_modified_energy_above_max_wavenumber_is_energy():
    grid = make_grid(2, 16, 2 * math.pi)
    u = rough_data(grid, RoughDataSpec(s=0.6, seed=2))
    N = grid.max_wavenumber * 1.01
    assert modified_energy(u, N, 0.6, 2) == pytest.approx(energy(u, 2).total, rel=1e-12)


def test_modified_energy_halves_kinetic_part():
    """|k| = 2N with s = 0.5: the smoothed kinetic term is half the original."""
    grid = make_grid(1, 32, 2 * math.pi)
    u = plane_wave(grid, 1.0, (8.0,))
    smoothed = apply_i_operator(u, 4.0, 0.5)
    assert energy(smoothed, 1).kinetic == pytest.approx(0.5 * energy(u, 1).kinetic, rel=1e-12)


def test_increment_rate_vanishes_without_smoothing():
    grid = make_grid(2, 16, 2 * math.pi)
    u = rough_data(grid, RoughDataSpec(s=0.5, seed=6, amplitude=2.0))
    N = grid.max_wavenumber * 1.01
    scale = (l2_norm(laplacian(u)) + l2_norm(nonlinearity(u, 2))) * l2_norm(nonlinearity(u, 2))
    assert abs(increment_rate(u, N, 0.5, 2)) <= 1e-10 * scale


def test_increment_rate_matches_centered_difference():
    """dE(Iu)/dt from the commutator formula agrees with a centered difference."""
    grid = make_grid(1, 128, 16 * math.pi)
    N, s, h = 0.5, 0.5, 1e-3
    u0 = gaussian(grid, 2.0, 2.0)
    traj = evolve(u0, StepConfig(dt=1e-4, t_final=3 * h, snapshot_stride=10), 1)
    before, middle, after = traj.states[1], traj.states[2], traj.states[3]
    difference = (modified_energy(after, N, s, 1) - modified_energy(before, N, s, 1)) / (2 * h)
    rate = increment_rate(middle, N, s, 1)
    assert rate != 0.0
    assert difference == pytest.approx(rate, rel=1e-3)


@pytest.mark.parametrize(
    "n, G, L, spec, N",
    [
        (2, 32, 2 * math.pi, RoughDataSpec(s=0.5, seed=6, amplitude=2.0), 3.0),
        (3, 16, 8.0, RoughDataSpec(s=0.6, amplitude=1.2, envelope_width=2.0, seed=0), 3.0),
        (4, 8, 6.0, RoughDataSpec(s=0.7, amplitude=2.0, envelope_width=1.5, seed=2), 2.0),
    ],
)
def test_increment_parts_sum_to_rate(n, G, L, spec, N):
    """Linear plus nonlinear part reproduces increment_rate; E(Iu) matches modified_energy."""
    u = rough_data(make_grid(n, G, L), spec)
    terms = increment_terms(u, N, spec.s, n)
    rate = increment_rate(u, N, spec.s, n)
    scale = (l2_norm(laplacian(u)) + l2_norm(nonlinearity(u, n))) * l2_norm(nonlinearity(u, n))
    assert terms.linear != 0.0 and terms.nonlinear != 0.0
    assert abs(terms.rate - rate) <= 1e-10 * scale
    assert terms.modified_energy == pytest.approx(modified_energy(u, N, spec.s, n), rel=1e-12)
    assert linear_increment(u, N, spec.s, n) == terms.linear
    assert nonlinear_increment(u, N, spec.s, n) == terms.nonlinear


def test_increment_parts_vanish_without_smoothing():
    grid = make_grid(2, 16, 2 * math.pi)
    u = rough_data(grid, RoughDataSpec(s=0.5, seed=6, amplitude=2.0))
    terms = increment_terms(u, grid.max_wavenumber * 1.01, 0.5, 2)
    scale = (l2_norm(laplacian(u)) + l2_norm(nonlinearity(u, 2))) * l2_norm(nonlinearity(u, 2))
    assert abs(terms.linear) <= 1e-10 * scale
    assert abs(terms.nonlinear) <= 1e-10 * scale


def test_spacetime_norm_of_constant_modulus(unit_plane_wave_trajectory):
    """|u| = 1: ||u||_{L^4 L^4}([0,1]) = (L^3)^(1/4)."""
    norm = spacetime_norm(unit_plane_wave_trajectory, 4.0, 4.0)
    assert norm.value == pytest.approx((2 * math.pi) ** 0.75, rel=1e-9)
    assert norm.value == pytest.approx(3.9633, rel=1e-4)
    assert (norm.t1, norm.t2) == (0.0, 1.0)


def test_spacetime_norm_time_supremum_is_root_mass(unit_plane_wave_trajectory):
    norm = spacetime_norm(unit_plane_wave_trajectory, math.inf, 2.0)
    assert norm.value == pytest.approx(math.sqrt(mass(unit_plane_wave_trajectory.initial)), rel=1e-12)


def test_spacetime_norm_on_sub_interval(unit_plane_wave_trajectory):
    norm = spacetime_norm(unit_plane_wave_trajectory, 4.0, 4.0, interval=(0.2, 0.6))
    assert norm.value == pytest.approx((2 * math.pi) ** 0.75 * 0.4**0.25, rel=1e-9)


def test_spacetime_norm_rejects_interval_outside_range(unit_plane_wave_trajectory):
    with pytest.raises(ValueError, match="outside"):
        spacetime_norm(unit_plane_wave_trajectory, 4.0, 4.0, interval=(0.5, 2.0))


def test_admissible_pairs_three_dimensions():
    labels = [pair.label for pair in admissible_pairs(3)]
    assert labels == ["(inf,2)", "(2,6)", "(8/3,4)"]


def test_admissible_pairs_four_dimensions():
    labels = [pair.label for pair in admissible_pairs(4)]
    assert labels == ["(inf,2)", "(2,4)", "(3,3)"]


@pytest.mark.parametrize("n", [3, 4])
def test_admissible_pairs_satisfy_scaling_relation(n):
    for pair in admissible_pairs(n):
        inverse_p = 0.0 if math.isinf(pair.p) else 1.0 / pair.p
        assert 2 * inverse_p + n / pair.q == pytest.approx(n / 2)


def test_admissible_pairs_unsupported_dimension():
    with pytest.raises(ValueError):
        admissible_pairs(2)


def test_admissible_pair_rejects_non_admissible():
    with pytest.raises(ValueError):
        AdmissiblePair(p=3.0, q=4.0, n=3)


def test_strichartz_norm_is_largest_pair(unit_plane_wave_trajectory):
    best = strichartz_norm(unit_plane_wave_trajectory)
    values = [spacetime_norm(unit_plane_wave_trajectory, p.p, p.q).value for p in admissible_pairs(3)]
    assert best.value == max(values)


def test_momentum_density_of_real_field_is_zero(gaussian_grid):
    assert not np.any(np.abs(momentum_density(gaussian(gaussian_grid))) > 1e-12)


def test_momentum_density_of_plane_wave():
    grid = make_grid(3, 8, 2 * math.pi)
    p = momentum_density(plane_wave(grid, 0.5, (2.0, -1.0, 0.0)))
    np.testing.assert_allclose(p[0], 0.25 * 2.0, atol=1e-12)
    np.testing.assert_allclose(p[1], -0.25, atol=1e-12)
    np.testing.assert_allclose(p[2], 0.0, atol=1e-12)


def test_total_momentum_of_moving_gaussian(gaussian_grid):
    """exp(i x_1) exp(-|x|^2) carries momentum equal to its mass along x_1."""
    u = gaussian(gaussian_grid, wavevector=(1.0, 0.0, 0.0))
    total = momentum_density(u).sum(axis=(1, 2, 3)) * gaussian_grid.cell_volume
    assert total[0] == pytest.approx(GAUSSIAN_MASS_3D, rel=1e-6)
    assert abs(total[1]) < 1e-9
    assert abs(total[2]) < 1e-9


def test_morawetz_action_of_plane_wave_vanishes():
    grid = make_grid(3, 16, 2 * math.pi)
    u = plane_wave(grid, 1.0, (1.0, 0.0, 0.0))
    assert abs(morawetz_action(u)) <= 1e-10 * morawetz_action_bound(u)


def test_morawetz_action_of_real_field_vanishes():
    u = gaussian(make_grid(3, 16, 8.0))
    assert abs(morawetz_action(u)) <= 1e-12 * morawetz_action_bound(u)


@settings(max_examples=5, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10_000))
def test_morawetz_fft_matches_direct_sum(seed):
    grid = make_grid(3, 8, 5.0)
    rng = np.random.default_rng(seed)
    u = Field(grid=grid, values=rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape))
    direct = morawetz_action_direct(u)
    assert morawetz_action(u) == pytest.approx(direct, rel=1e-6, abs=1e-9 * morawetz_action_bound(u))


def test_morawetz_direct_rejects_large_grid():
    grid = make_grid(3, 32, 1.0)
    with pytest.raises(ValueError, match="G <= 16"):
        morawetz_action_direct(Field(grid=grid, values=np.zeros(grid.shape)))


def test_morawetz_requires_three_dimensions():
    grid = make_grid(2, 8, 1.0)
    with pytest.raises(ValueError, match="n = 3"):
        morawetz_action(Field(grid=grid, values=np.ones(grid.shape)))


def test_morawetz_sign_for_approaching_and_receding_bumps():
    """Bumps moving toward each other give M > 0; moving apart gives M < 0."""
    grid = make_grid(3, 32, 16.0)
    middle = grid.L / 2
    left = (middle - 3.0, middle, middle)
    right = (middle + 3.0, middle, middle)

    def pair(speed):
        a = gaussian(grid, 1.0, 1.0, center=left, wavevector=(speed, 0.0, 0.0))
        b = gaussian(grid, 1.0, 1.0, center=right, wavevector=(-speed, 0.0, 0.0))
        return Field(grid=grid, values=a.values + b.values)

    approaching = morawetz_action(pair(2.0))
    receding = morawetz_action(pair(-2.0))
    assert approaching > 0
    assert receding < 0
    assert approaching == pytest.approx(-receding, rel=1e-6)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10_000))
def test_morawetz_action_respects_bound(seed):
    grid = make_grid(3, 16, 2 * math.pi)
    u = rough_data(grid, RoughDataSpec(s=0.6, seed=seed))
    assert abs(morawetz_action(u)) <= morawetz_action_bound(u)
    assert abs(morawetz_action(u, 2.0, 0.6)) <= morawetz_action_bound(u, 2.0, 0.6)


def test_smoothed_trajectory_keeps_times(unit_plane_wave_trajectory):
    smoothed = smoothed_trajectory(unit_plane_wave_trajectory, 0.5, 0.5)
    assert smoothed.times == unit_plane_wave_trajectory.times
    assert mass(smoothed.initial) == pytest.approx(mass(unit_plane_wave_trajectory.initial) * 0.5, rel=1e-12)


def test_boundary_mass_fraction(gaussian_grid):
    assert boundary_mass_fraction(gaussian(gaussian_grid)) < 1e-12
    grid = make_grid(1, 64, 2 * math.pi)
    fraction = boundary_mass_fraction(plane_wave(grid, 1.0, (1.0,)))
    assert 0.15 <= fraction <= 0.25


def test_boundary_mass_fraction_rejects_bad_shell(gaussian_grid):
    with pytest.raises(ValueError):
        boundary_mass_fraction(gaussian(gaussian_grid), shell=0.6)
