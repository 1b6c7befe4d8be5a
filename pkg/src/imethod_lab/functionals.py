"""Scalar and spacetime functionals of fields and trajectories.

Conventions:
    - All spatial integrals use dx^n quadrature; kinetic terms use Parseval.
    - The Morawetz action is M = -2 * int p(x) . (K * rho)(x) dx with
      w = Iu, rho = |w|^2, p = Im(conj(w) grad w) and K(d) = d/|d|, K(0) = 0.
      The pair integral collapses to one convolution because K is odd; see
      docs/morawetz_action.md. With this sign, approaching bumps give M > 0.
"""

import logging
import math
from collections.abc import Sequence
from functools import lru_cache

import numpy as np
from scipy import fft
from scipy.integrate import trapezoid

from .config import worker_count
from .dynamics import nonlinearity
from .spectral import (
    apply_i_operator,
    forward_array,
    gradient,
    inverse_array,
    l2_norm,
    laplacian,
    lebesgue_norm,
    multiplier_symbol,
    sobolev_norm,
)
from .types import (
    AdmissiblePair,
    EnergyTerms,
    Field,
    Grid,
    IncrementTerms,
    MultiplierSpec,
    SpacetimeNorm,
    Trajectory,
)

logger = logging.getLogger(__name__)

# Largest grid accepted by the O(G^6) pair-sum reference
DIRECT_MORAWETZ_MAX_POINTS = 16
TIME_TOLERANCE = 1e-12


def _smoothed(f: Field, N: float | None, s: float | None) -> Field:
    if N is None:
        return f
    if s is None:
        raise ValueError("s is required when N is given")
    return apply_i_operator(f, N, s)


def mass(f: Field) -> float:
    """M(u) = int |u|^2 dx."""
    return f.grid.cell_volume * float(np.sum(np.abs(f.values) ** 2))


def energy(f: Field, n: int) -> EnergyTerms:
    """E(u) = 1/2 int |grad u|^2 + n/(2n+4) int |u|^(2+4/n).

    Args:
        f: Field
        n: Dimension

    Returns:
        Kinetic and potential terms (total is their sum)
    """
    grid = f.grid
    if n != grid.n:
        raise ValueError(f"Dimension {n} does not match grid dimension {grid.n}")
    spectrum = forward_array(f.values) * grid.cell_volume
    gradient_symbol = multiplier_symbol(grid, MultiplierSpec.fractional_gradient(1.0))
    kinetic = 0.5 * float(np.sum(gradient_symbol**2 * np.abs(spectrum) ** 2)) / grid.volume
    potential = (
        n / (2.0 * n + 4.0) * grid.cell_volume * float(np.sum(np.abs(f.values) ** (2.0 + 4.0 / n)))
    )
    return EnergyTerms(kinetic=kinetic, potential=potential)


def modified_energy(f: Field, N: float, s: float, n: int) -> float:
    """E(Iu)."""
    return energy(apply_i_operator(f, N, s), n).total


def commutator(f: Field, N: float, s: float, n: int) -> Field:
    """I(|u|^(4/n) u) - |Iu|^(4/n) Iu."""
    smoothed_nonlinearity = apply_i_operator(nonlinearity(f, n), N, s).values
    nonlinearity_of_smoothed = nonlinearity(apply_i_operator(f, N, s), n).values
    return Field(grid=f.grid, values=smoothed_nonlinearity - nonlinearity_of_smoothed)


def increment_rate(f: Field, N: float, s: float, n: int) -> float:
    """Instantaneous d/dt E(Iu) along the flow through state `f`.

    With w = Iu and w_t = i(Laplacian(w) - I(|u|^(4/n) u)), the rate is
    -Re int conj(w_t) [I(|u|^(4/n) u) - |w|^(4/n) w] dx.
    """
    w = apply_i_operator(f, N, s)
    smoothed_nonlinearity = apply_i_operator(nonlinearity(f, n), N, s).values
    w_t = 1j * (laplacian(w).values - smoothed_nonlinearity)
    defect = smoothed_nonlinearity - nonlinearity(w, n).values
    return -f.grid.cell_volume * float(np.sum(np.real(np.conj(w_t) * defect)))


def increment_terms(f: Field, N: float, s: float, n: int) -> IncrementTerms:
    """E(Iu) with the linear and nonlinear parts of d/dt E(Iu), sharing transforms.

    With C = I(|u|^(4/n) u) - |Iu|^(4/n) Iu:
        linear    = -Im int conj(I Laplacian(u)) C dx
        nonlinear = +Im int conj(I(|u|^(4/n) u)) C dx

    Args:
        f: State
        N: I-operator threshold
        s: I-operator regularity
        n: Dimension

    Returns:
        IncrementTerms whose rate matches increment_rate
    """
    grid = f.grid
    if n != grid.n:
        raise ValueError(f"Dimension {n} does not match grid dimension {grid.n}")
    symbol = multiplier_symbol(grid, MultiplierSpec.i_operator(N, s))
    xi_squared = grid.wavenumber() ** 2
    w_hat = symbol * forward_array(f.values)
    w = inverse_array(w_hat)
    smoothed_nonlinearity = inverse_array(symbol * forward_array(nonlinearity(f, n).values))
    smoothed_laplacian = inverse_array(-xi_squared * w_hat)
    defect = smoothed_nonlinearity - np.abs(w) ** (4.0 / n) * w

    # Parseval for the unnormalized FFT: sum |u|^2 = G^-n * sum |fft(u)|^2
    kinetic = 0.5 * grid.cell_volume * float(np.sum(xi_squared * np.abs(w_hat) ** 2)) / w.size
    potential = n / (2.0 * n + 4.0) * grid.cell_volume * float(np.sum(np.abs(w) ** (2.0 + 4.0 / n)))
    linear = -grid.cell_volume * float(np.sum(np.imag(np.conj(smoothed_laplacian) * defect)))
    nonlinear = grid.cell_volume * float(np.sum(np.imag(np.conj(smoothed_nonlinearity) * defect)))
    return IncrementTerms(modified_energy=kinetic + potential, linear=linear, nonlinear=nonlinear)


def linear_increment(f: Field, N: float, s: float, n: int) -> float:
    """Part of d/dt E(Iu) driven by the Laplacian."""
    return increment_terms(f, N, s, n).linear


def nonlinear_increment(f: Field, N: float, s: float, n: int) -> float:
    """Part of d/dt E(Iu) driven by I(|u|^(4/n) u)."""
    return increment_terms(f, N, s, n).nonlinear


def _interval_indices(times: np.ndarray, interval: tuple[float, float] | None) -> np.ndarray:
    if interval is None:
        return np.arange(times.size)
    t1, t2 = interval
    if t1 > t2:
        raise ValueError(f"Interval [{t1}, {t2}] is reversed")
    if t1 < times[0] - TIME_TOLERANCE or t2 > times[-1] + TIME_TOLERANCE:
        raise ValueError(
            f"Interval [{t1}, {t2}] lies outside the trajectory range [{times[0]}, {times[-1]}]"
        )
    return np.flatnonzero((times >= t1 - TIME_TOLERANCE) & (times <= t2 + TIME_TOLERANCE))


def spacetime_norm(
    traj: Trajectory,
    p: float,
    q: float,
    interval: tuple[float, float] | None = None,
) -> SpacetimeNorm:
    """||u||_{L_t^p L_x^q} from the snapshots inside `interval`.

    Args:
        traj: Trajectory
        p: Time exponent (>= 1 or inf)
        q: Space exponent (>= 1 or inf)
        interval: (t1, t2), default the whole trajectory

    Returns:
        SpacetimeNorm; the time integral uses the trapezoid rule, p = inf the max

    Raises:
        ValueError: If the interval leaves the trajectory range or exponents are < 1
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    times = traj.time_array()
    indices = _interval_indices(times, interval)
    t1, t2 = interval if interval is not None else (times[0], times[-1])
    space = np.array([lebesgue_norm(traj.states[i], q) for i in indices])
    if space.size == 0:
        value = 0.0
    elif math.isinf(p):
        value = float(np.max(space))
    else:
        value = float(trapezoid(space**p, times[indices])) ** (1.0 / p)
    return SpacetimeNorm(p=p, q=q, t1=float(t1), t2=float(t2), value=value)


def admissible_pairs(n: int) -> list[AdmissiblePair]:
    """Finite list of admissible pairs used in place of the full S^0 supremum.

    Contains (inf, 2), the endpoint (2, 2n/(n-2)), the pair
    (4(n-1)/n, 2(n-1)/(n-2)) and, for n = 3, (8/3, 4). Duplicates removed.
    """
    if n not in (3, 4):
        raise ValueError(f"admissible_pairs is defined for n in {{3, 4}}, got {n}")
    candidates = [
        (math.inf, 2.0),
        (2.0, 2.0 * n / (n - 2)),
        (4.0 * (n - 1) / n, 2.0 * (n - 1) / (n - 2)),
    ]
    if n == 3:
        candidates.append((8.0 / 3.0, 4.0))
    pairs: list[AdmissiblePair] = []
    for p, q in candidates:
        pair = AdmissiblePair(p=p, q=q, n=n)
        if all(pair.label != existing.label for existing in pairs):
            pairs.append(pair)
    return pairs


def strichartz_norm(
    traj: Trajectory,
    pairs: Sequence[AdmissiblePair] | None = None,
    interval: tuple[float, float] | None = None,
) -> SpacetimeNorm:
    """Largest single-pair spacetime norm over a finite pair list."""
    pairs = list(pairs) if pairs is not None else admissible_pairs(traj.n)
    if not pairs:
        raise ValueError("strichartz_norm needs at least one pair")
    norms = [spacetime_norm(traj, pair.p, pair.q, interval) for pair in pairs]
    return max(norms, key=lambda norm: norm.value)


def momentum_density(f: Field) -> np.ndarray:
    """Components Im(conj(u) d_j u), stacked along axis 0."""
    conjugate = np.conj(f.values)
    return np.stack([np.imag(conjugate * partial.values) for partial in gradient(f)])


@lru_cache(maxsize=4)
def _morawetz_kernel_spectrum(grid: Grid) -> tuple[np.ndarray, ...]:
    # displacement index m in fftfreq order on the doubled grid covers (-G, G)
    size = 2 * grid.G
    offsets = np.fft.fftfreq(size, 1.0 / size) * grid.dx
    mesh = np.meshgrid(offsets, offsets, offsets, indexing="ij", sparse=True)
    distance = np.sqrt(mesh[0] ** 2 + mesh[1] ** 2 + mesh[2] ** 2)
    safe = np.where(distance > 0, distance, 1.0)
    spectra = []
    for component in mesh:
        kernel = np.where(distance > 0, component / safe, 0.0)
        spectrum = fft.rfftn(kernel, s=(size,) * 3, workers=worker_count())
        spectrum.setflags(write=False)
        spectra.append(spectrum)
    return tuple(spectra)


def _require_three_dimensions(f: Field) -> None:
    if f.grid.n != 3:
        raise ValueError(f"Morawetz action is defined for n = 3, got n = {f.grid.n}")


def morawetz_action(f: Field, N: float | None = None, s: float | None = None) -> float:
    """Interaction Morawetz action of w = Iu (or of u when N is None).

    The convolution K * rho is computed with zero padding to 2G per axis, so
    the kernel sees true displacements in (-L, L)^3 without wrap-around.

    Raises:
        ValueError: If the grid is not three-dimensional
    """
    _require_three_dimensions(f)
    w = _smoothed(f, N, s)
    grid = w.grid
    G = grid.G
    size = (2 * G,) * 3
    density = np.abs(w.values) ** 2
    density_spectrum = fft.rfftn(density, s=size, workers=worker_count())
    momentum = momentum_density(w)
    total = 0.0
    for component, kernel_spectrum in enumerate(_morawetz_kernel_spectrum(grid)):
        convolved = fft.irfftn(density_spectrum * kernel_spectrum, s=size, workers=worker_count())
        convolved = convolved[:G, :G, :G] * grid.cell_volume
        total += float(np.sum(momentum[component] * convolved))
    return -2.0 * grid.cell_volume * total


def morawetz_action_direct(f: Field, N: float | None = None, s: float | None = None) -> float:
    """Reference O(G^6) pair sum of the Morawetz action for tiny grids.

    Raises:
        ValueError: If the grid is not 3D or has more than 16 points per axis
    """
    _require_three_dimensions(f)
    if f.grid.G > DIRECT_MORAWETZ_MAX_POINTS:
        raise ValueError(
            f"Direct Morawetz sum limited to G <= {DIRECT_MORAWETZ_MAX_POINTS}, got {f.grid.G}"
        )
    w = _smoothed(f, N, s)
    grid = w.grid
    coords = np.stack(
        np.meshgrid(*(np.arange(grid.G) * grid.dx,) * 3, indexing="ij"), axis=-1
    ).reshape(-1, 3)
    density = (np.abs(w.values) ** 2).reshape(-1)
    momentum = momentum_density(w).reshape(3, -1).T
    total = 0.0
    for index in range(coords.shape[0]):
        displacement = coords[index] - coords
        distance = np.linalg.norm(displacement, axis=1)
        safe = np.where(distance > 0, distance, 1.0)
        kernel = np.where(distance[:, None] > 0, displacement / safe[:, None], 0.0)
        total += float(momentum[index] @ (kernel.T @ density))
    return -2.0 * grid.cell_volume**2 * total


def morawetz_action_bound(f: Field, N: float | None = None, s: float | None = None) -> float:
    """Cap 2*sqrt(2) * ||w||^3 * ||grad w|| on |morawetz_action|."""
    w = _smoothed(f, N, s)
    return 2.0 * math.sqrt(2.0) * l2_norm(w) ** 3 * sobolev_norm(w, 1.0, homogeneous=True)


def smoothed_trajectory(traj: Trajectory, N: float, s: float) -> Trajectory:
    """Trajectory of Iu with the same snapshot times."""
    states = tuple(apply_i_operator(state, N, s) for state in traj.states)
    return traj.model_copy(update={"states": states})


def boundary_mass_fraction(f: Field, shell: float = 0.1) -> float:
    """Fraction of the mass within shell*L of the box faces.

    Measures how far the periodic box is from the whole-space setting.
    """
    if not 0 < shell < 0.5:
        raise ValueError(f"shell must lie in (0, 0.5), got {shell}")
    grid = f.grid
    width = shell * grid.L
    near = np.zeros(grid.shape, dtype=bool)
    for axis in grid.coordinates():
        near = near | (axis < width) | (axis > grid.L - width)
    density = np.abs(f.values) ** 2
    total = float(np.sum(density))
    if total == 0.0:
        return 0.0
    return float(np.sum(density[near])) / total
