"""Spectral calculus on the periodic box.

Transforms follow the continuum convention

    u_hat(xi_k) = dx^n * sum_x u(x) exp(-i xi_k . x)
    u(x)        = L^-n * sum_k u_hat(xi_k) exp(i xi_k . x)

so discrete Parseval reads dx^n * sum |u|^2 = L^-n * sum |u_hat|^2 and the
discrete functionals converge to their integrals under refinement. All
multipliers are radial and act diagonally in frequency.
"""

import logging
import math
from functools import lru_cache

import numpy as np
from scipy import fft

from .config import worker_count
from .types import Field, Grid, MultiplierSpec, SpectralField

logger = logging.getLogger(__name__)


def make_grid(n: int, G: int, L: float) -> Grid:
    """Build a periodic grid.

    Args:
        n: Spatial dimension (1..4)
        G: Points per axis, a power of two >= 8
        L: Box side length

    Returns:
        Validated Grid

    Raises:
        ValueError: If any parameter is out of range
    """
    return Grid(n=n, G=G, L=L)


def forward_array(values: np.ndarray) -> np.ndarray:
    """Unnormalized n-dimensional FFT using the configured worker count."""
    return fft.fftn(values, workers=worker_count())


def inverse_array(coeffs: np.ndarray) -> np.ndarray:
    return fft.ifftn(coeffs, workers=worker_count())


def transform_forward(f: Field) -> SpectralField:
    """Fourier coefficients of `f` in the continuum normalization."""
    coeffs = forward_array(f.values) * f.grid.cell_volume
    return SpectralField(grid=f.grid, coeffs=coeffs)


def transform_inverse(F: SpectralField) -> Field:
    """Samples of the trigonometric interpolant with coefficients `F`."""
    values = inverse_array(F.coeffs) / F.grid.cell_volume
    return Field(grid=F.grid, values=values)


def _bump(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    positive = t > 0
    out[positive] = np.exp(-1.0 / t[positive])
    return out


def cutoff_profile(r: float | np.ndarray) -> float | np.ndarray:
    """Smooth radial cutoff: 1 on [0, 1/2], 0 on [1, inf), C-infinity blend between.

    Args:
        r: Nonnegative radius (scalar or array)

    Returns:
        Weight in [0, 1], same shape as `r`

    Raises:
        ValueError: If any radius is negative
    """
    radius = np.asarray(r, dtype=float)
    if np.any(radius < 0):
        raise ValueError("cutoff_profile requires r >= 0")
    rising = _bump(2.0 - 2.0 * radius)
    falling = _bump(2.0 * radius - 1.0)
    # rising + falling > 0 for every r >= 0
    weight = rising / (rising + falling)
    if weight.ndim == 0:
        return float(weight)
    return weight


@lru_cache(maxsize=64)
def multiplier_symbol(grid: Grid, spec: MultiplierSpec) -> np.ndarray:
    """Symbol of `spec` sampled at |xi| over the lattice, in FFT order (read-only)."""
    xi = grid.wavenumber()
    if spec.kind == "i_operator":
        symbol = (spec.N / np.maximum(xi, spec.N)) ** (1.0 - spec.s)
    elif spec.kind == "low_pass":
        symbol = cutoff_profile(xi / spec.M)
    elif spec.kind == "high_pass":
        symbol = 1.0 - cutoff_profile(xi / spec.M)
    elif spec.kind == "band":
        symbol = cutoff_profile(xi / spec.M) - cutoff_profile(2.0 * xi / spec.M)
    elif spec.kind == "fractional_gradient":
        symbol = np.zeros_like(xi)
        np.power(xi, spec.order, out=symbol, where=xi > 0)
    elif spec.kind == "bracket_gradient":
        symbol = (1.0 + xi**2) ** (spec.order / 2.0)
    else:
        symbol = np.broadcast_to(np.asarray(spec.symbol(xi)), xi.shape).copy()
    symbol = np.asarray(symbol)
    symbol.setflags(write=False)
    return symbol


def apply_symbol(f: Field, symbol: np.ndarray) -> Field:
    """Multiply the spectrum of `f` by an FFT-ordered symbol array."""
    values = inverse_array(forward_array(f.values) * symbol)
    return Field(grid=f.grid, values=values)


def apply_multiplier(f: Field, spec: MultiplierSpec) -> Field:
    """Apply a radial Fourier multiplier.

    Args:
        f: Input field (not modified)
        spec: Multiplier description

    Returns:
        New field whose spectrum is the input spectrum times the symbol
    """
    return apply_symbol(f, multiplier_symbol(f.grid, spec))


def apply_i_operator(f: Field, N: float, s: float) -> Field:
    """I-operator: identity below N, damped by (N/|xi|)^(1-s) above."""
    return apply_multiplier(f, MultiplierSpec.i_operator(N, s))


@lru_cache(maxsize=32)
def _derivative_symbols(grid: Grid) -> tuple[np.ndarray, ...]:
    freqs = 1j * np.array(grid.axis_frequencies())
    # odd symbol at the unpaired Nyquist index
    freqs[grid.G // 2] = 0.0
    symbols = []
    for axis in range(grid.n):
        shape = [1] * grid.n
        shape[axis] = grid.G
        symbol = freqs.reshape(shape)
        symbol.setflags(write=False)
        symbols.append(symbol)
    return tuple(symbols)


def gradient(f: Field) -> tuple[Field, ...]:
    """Spectral partial derivatives, one Field per axis."""
    spectrum = forward_array(f.values)
    return tuple(
        Field(grid=f.grid, values=inverse_array(spectrum * symbol))
        for symbol in _derivative_symbols(f.grid)
    )


def laplacian(f: Field) -> Field:
    return apply_symbol(f, -(f.grid.wavenumber() ** 2))


def l2_norm(f: Field) -> float:
    return math.sqrt(f.grid.cell_volume * float(np.sum(np.abs(f.values) ** 2)))


def lebesgue_norm(f: Field, q: float) -> float:
    """Discrete L^q norm (dx^n quadrature); q = inf gives the max modulus.

    Raises:
        ValueError: If q < 1
    """
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    modulus = np.abs(f.values)
    if math.isinf(q):
        return float(np.max(modulus))
    return (f.grid.cell_volume * float(np.sum(modulus**q))) ** (1.0 / q)


def sobolev_norm(f: Field, s: float, homogeneous: bool = True) -> float:
    """Sobolev norm from the spectrum.

    Args:
        f: Input field
        s: Regularity in [-2, 2]
        homogeneous: |xi|^(2s) weights (zero mode dropped unless s = 0) when
            True, (1 + |xi|^2)^s weights otherwise

    Returns:
        (L^-n * sum weight * |u_hat|^2)^(1/2)

    Raises:
        ValueError: If s is outside [-2, 2]
    """
    if not -2.0 <= s <= 2.0:
        raise ValueError(f"s must lie in [-2, 2], got {s}")
    grid = f.grid
    power = np.abs(forward_array(f.values) * grid.cell_volume) ** 2
    xi = grid.wavenumber()
    if not homogeneous:
        weight = (1.0 + xi**2) ** s
    elif s == 0:
        weight = np.ones_like(xi)
    else:
        weight = np.zeros_like(xi)
        np.power(xi, 2.0 * s, out=weight, where=xi > 0)
    return math.sqrt(float(np.sum(weight * power)) / grid.volume)


def littlewood_paley_pieces(f: Field, M_min: float, M_max: float) -> list[tuple[float, Field]]:
    """Dyadic decomposition P_{<=M_min} f + sum_{M_min < M <= M_max} P_M f.

    Args:
        f: Input field
        M_min: Scale of the low-frequency piece
        M_max: Largest band scale; M_max / M_min must be a power of two

    Returns:
        (scale, piece) pairs; the first piece is P_{<=M_min} f, the rest are
        bands. Their sum is P_{<=M_max} f.

    Raises:
        ValueError: If the scales are not dyadically related
    """
    if M_min <= 0 or M_max < M_min:
        raise ValueError(f"Need 0 < M_min <= M_max, got {M_min}, {M_max}")
    levels = math.log2(M_max / M_min)
    if abs(levels - round(levels)) > 1e-12:
        raise ValueError(f"M_max / M_min = {M_max / M_min} is not a power of two")
    pieces = [(M_min, apply_multiplier(f, MultiplierSpec.low_pass(M_min)))]
    for level in range(1, int(round(levels)) + 1):
        scale = M_min * 2.0**level
        pieces.append((scale, apply_multiplier(f, MultiplierSpec.band(scale))))
    logger.debug(f"Littlewood-Paley split into {len(pieces)} pieces up to M={M_max:g}")
    return pieces
