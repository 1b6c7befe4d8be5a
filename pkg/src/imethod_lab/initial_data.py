"""Initial data synthesis: Gaussians, lattice plane waves and rough power-law data."""

import logging
import math
from collections.abc import Sequence

import numpy as np

from .config import InitialDataSpec
from .spectral import transform_inverse
from .types import Field, Grid, RoughDataSpec, SpectralField

logger = logging.getLogger(__name__)

LATTICE_TOLERANCE = 1e-9


def _phase(grid: Grid, wavevector: Sequence[float]) -> np.ndarray:
    phase = np.zeros(grid.shape)
    for k, axis in zip(wavevector, grid.coordinates()):
        phase = phase + k * axis
    return phase


def lattice_wavevector(grid: Grid, wavevector: Sequence[float]) -> tuple[float, ...]:
    """Snap a physical wavevector to the lattice.

    Raises:
        ValueError: If any component is off the lattice (beyond 1e-9 in index
            units) or outside the index range [-G/2, G/2 - 1]
    """
    if len(wavevector) != grid.n:
        raise ValueError(f"wavevector has {len(wavevector)} components, grid has n={grid.n}")
    snapped = []
    for component in wavevector:
        index = component / grid.frequency_step
        nearest = round(index)
        if abs(index - nearest) > LATTICE_TOLERANCE:
            raise ValueError(
                f"wavevector component {component} is off the lattice (step {grid.frequency_step:g})"
            )
        if not -grid.G // 2 <= nearest <= grid.G // 2 - 1:
            raise ValueError(f"wavevector index {nearest} outside [{-grid.G // 2}, {grid.G // 2 - 1}]")
        snapped.append(nearest * grid.frequency_step)
    return tuple(snapped)


def gaussian(
    grid: Grid,
    amplitude: float = 1.0,
    width: float = 1.0,
    center: Sequence[float] | None = None,
    wavevector: Sequence[float] | None = None,
) -> Field:
    """amplitude * exp(-|x - center|^2 / width^2), centered in the box by default.

    An optional wavevector multiplies the bump by exp(i k . x).
    """
    center = tuple(center) if center is not None else grid.center()
    if len(center) != grid.n:
        raise ValueError(f"center has {len(center)} components, grid has n={grid.n}")
    radius_squared = np.zeros(grid.shape)
    for c, axis in zip(center, grid.coordinates()):
        radius_squared = radius_squared + (axis - c) ** 2
    values = amplitude * np.exp(-radius_squared / width**2).astype(complex)
    if wavevector is not None:
        if len(wavevector) != grid.n:
            raise ValueError(f"wavevector has {len(wavevector)} components, grid has n={grid.n}")
        values = values * np.exp(1j * _phase(grid, wavevector))
    return Field(grid=grid, values=values)


def plane_wave(grid: Grid, amplitude: float, wavevector: Sequence[float]) -> Field:
    """amplitude * exp(i k . x) with k on the lattice."""
    k = lattice_wavevector(grid, wavevector)
    return Field(grid=grid, values=amplitude * np.exp(1j * _phase(grid, k)))


def _power_law_series(grid: Grid, spec: RoughDataSpec, amplitude: float) -> Field:
    rng = np.random.default_rng(spec.seed)
    phases = rng.uniform(0.0, 2.0 * math.pi, size=grid.shape)
    decay = (spec.s + grid.n / 2.0 + spec.delta) / 2.0
    modulus = amplitude * (1.0 + grid.wavenumber() ** 2) ** (-decay)
    coeffs = modulus * np.exp(1j * phases)
    return transform_inverse(SpectralField(grid=grid, coeffs=coeffs))


def rough_data(grid: Grid, spec: RoughDataSpec) -> Field:
    """Field with |u_hat| = amplitude * (1+|xi|^2)^(-(s + n/2 + delta)/2) and seeded phases.

    The H^s norm stays bounded under grid refinement while H^1 grows for s < 1.

    With spec.envelope_width set, the series R is instead normalized to
    max|R| = 1 and the datum is amplitude * psi * (1 + roughness * R) with
    psi = exp(-|x - c|^2 / width^2) centered in the box. The factor has no
    zeros, so |u|^(4/n) u stays smooth wherever the core is, and the rough
    part is confined to where the nonlinear potential acts.
    """
    if spec.envelope_width is None:
        return _power_law_series(grid, spec, spec.amplitude)
    series = _power_law_series(grid, spec, 1.0).values
    peak = float(np.max(np.abs(series)))
    if peak == 0.0:
        raise ValueError("power-law series vanished on the grid")
    core = gaussian(grid, spec.amplitude, spec.envelope_width).values
    values = core * (1.0 + spec.roughness * series / peak)
    if spec.envelope_width > grid.L / 4.0:
        logger.warning(
            f"Envelope width {spec.envelope_width:g} exceeds L/4 = {grid.L / 4.0:g}; the core reaches the box faces"
        )
    return Field(grid=grid, values=values)


def synthesize_initial_data(spec: InitialDataSpec, grid: Grid) -> Field:
    """Build the initial datum described by `spec` on `grid`.

    Raises:
        ValueError: If a plane-wave wavevector is off the lattice
    """
    if spec.kind == "gaussian":
        field = gaussian(grid, spec.amplitude, spec.width, spec.center, spec.wavevector)
    elif spec.kind == "plane_wave":
        field = plane_wave(grid, spec.amplitude, spec.wavevector)
    else:
        field = rough_data(grid, spec.rough_spec())
    logger.info(f"Synthesized {spec.kind} initial data on n={grid.n}, G={grid.G}, L={grid.L:g}")
    return field
