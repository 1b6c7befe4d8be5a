"""Type definitions for imethod-lab."""

import math
from collections.abc import Callable
from fractions import Fraction
from functools import lru_cache
from typing import Any, Literal

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    ValidationInfo,
    computed_field,
    field_validator,
    model_validator,
)
from pydantic import Field as ModelField

MultiplierKind = Literal[
    "i_operator",
    "low_pass",
    "high_pass",
    "band",
    "fractional_gradient",
    "bracket_gradient",
    "custom",
]
CheckStatus = Literal["PASS", "FAIL", "INCONCLUSIVE"]

# Step-count rounding tolerance for t_final / dt
STEP_COUNT_TOLERANCE = 1e-9


@lru_cache(maxsize=32)
def _axis_frequencies(G: int, L: float) -> np.ndarray:
    freqs = (2.0 * math.pi / L) * np.fft.fftfreq(G, 1.0 / G)
    freqs.setflags(write=False)
    return freqs


@lru_cache(maxsize=32)
def _wavenumber(n: int, G: int, L: float) -> np.ndarray:
    freqs = _axis_frequencies(G, L)
    squared = np.zeros((G,) * n)
    for axis in range(n):
        shape = [1] * n
        shape[axis] = G
        squared = squared + freqs.reshape(shape) ** 2
    magnitude = np.sqrt(squared)
    magnitude.setflags(write=False)
    return magnitude


@lru_cache(maxsize=32)
def _coordinates(n: int, G: int, L: float) -> tuple[np.ndarray, ...]:
    axis = np.arange(G) * (L / G)
    axes = []
    for index in range(n):
        shape = [1] * n
        shape[index] = G
        values = axis.reshape(shape)
        values.setflags(write=False)
        axes.append(values)
    return tuple(axes)


class Grid(BaseModel):
    """Periodic box [0, L)^n sampled with G points per axis.

    Physical points sit at x_j = j * dx. Spectral arrays are stored in FFT
    order, so lattice index k lives at position k mod G and the single
    Nyquist index is -G/2.
    """

    model_config = ConfigDict(frozen=True)

    n: int = ModelField(ge=1, le=4, description="Spatial dimension")
    G: int = ModelField(ge=8, description="Points per axis (power of two)")
    L: float = ModelField(gt=0, description="Box side length")

    @field_validator("G")
    @classmethod
    def _power_of_two(cls, value: int) -> int:
        if value & (value - 1):
            raise ValueError(f"G must be a power of two, got {value}")
        return value

    @field_validator("L")
    @classmethod
    def _finite_length(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError(f"L must be finite, got {value}")
        return value

    @property
    def dx(self) -> float:
        return self.L / self.G

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.G,) * self.n

    @property
    def cell_volume(self) -> float:
        """Quadrature weight dx^n."""
        return self.dx**self.n

    @property
    def volume(self) -> float:
        return self.L**self.n

    @property
    def frequency_step(self) -> float:
        return 2.0 * math.pi / self.L

    @property
    def nyquist(self) -> float:
        """Largest per-axis lattice frequency, pi*G/L."""
        return math.pi * self.G / self.L

    @property
    def max_wavenumber(self) -> float:
        """Largest |xi| on the lattice; the I-operator is the identity for N at or above it."""
        return math.sqrt(self.n) * self.nyquist

    def axis_frequencies(self) -> np.ndarray:
        """Per-axis frequencies (2*pi/L) * k in FFT order (read-only)."""
        return _axis_frequencies(self.G, self.L)

    def wavenumber(self) -> np.ndarray:
        """|xi| over the full lattice (read-only)."""
        return _wavenumber(self.n, self.G, self.L)

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Sparse per-axis coordinate arrays, broadcastable to the grid shape."""
        return _coordinates(self.n, self.G, self.L)

    def center(self) -> tuple[float, ...]:
        return (self.L / 2.0,) * self.n


def _frozen_complex(values: Any, grid: Grid | None, label: str) -> np.ndarray:
    array = np.array(values, dtype=np.complex128)
    if grid is not None and array.shape != grid.shape:
        raise ValueError(f"{label} shape {array.shape} does not match grid shape {grid.shape}")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{label} contain non-finite entries")
    array.setflags(write=False)
    return array


class Field(BaseModel):
    """Complex samples of a function on a Grid at a fixed time."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: Grid
    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def _validate_values(cls, value: Any, info: ValidationInfo) -> np.ndarray:
        return _frozen_complex(value, info.data.get("grid"), "Field values")


class SpectralField(BaseModel):
    """Fourier coefficients of a Field on the dual lattice (FFT order)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: Grid
    coeffs: np.ndarray

    @field_validator("coeffs", mode="before")
    @classmethod
    def _validate_coeffs(cls, value: Any, info: ValidationInfo) -> np.ndarray:
        return _frozen_complex(value, info.data.get("grid"), "Spectral coefficients")


class MultiplierSpec(BaseModel):
    """Radial Fourier multiplier description.

    Use the classmethod constructors; each kind needs a different parameter.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: MultiplierKind
    N: float | None = ModelField(default=None, gt=0, description="I-operator threshold")
    s: float | None = ModelField(default=None, gt=0, le=1, description="I-operator regularity")
    M: float | None = ModelField(default=None, gt=0, description="Projector scale")
    order: float | None = None
    symbol: Callable[[np.ndarray], np.ndarray] | None = None

    @model_validator(mode="after")
    def _check_parameters(self) -> "MultiplierSpec":
        required = {
            "i_operator": ("N", "s"),
            "low_pass": ("M",),
            "high_pass": ("M",),
            "band": ("M",),
            "fractional_gradient": ("order",),
            "bracket_gradient": ("order",),
            "custom": ("symbol",),
        }[self.kind]
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{self.kind} multiplier requires {', '.join(missing)}")
        if self.kind == "fractional_gradient" and self.order < 0:
            raise ValueError(
                f"fractional_gradient order {self.order} < 0 is singular at xi = 0"
            )
        return self

    @property
    def is_contraction(self) -> bool:
        """True for kinds whose symbol lies in [0, 1]."""
        return self.kind in ("i_operator", "low_pass", "high_pass", "band")

    @classmethod
    def i_operator(cls, N: float, s: float) -> "MultiplierSpec":
        return cls(kind="i_operator", N=N, s=s)

    @classmethod
    def low_pass(cls, M: float) -> "MultiplierSpec":
        return cls(kind="low_pass", M=M)

    @classmethod
    def high_pass(cls, M: float) -> "MultiplierSpec":
        return cls(kind="high_pass", M=M)

    @classmethod
    def band(cls, M: float) -> "MultiplierSpec":
        return cls(kind="band", M=M)

    @classmethod
    def fractional_gradient(cls, order: float) -> "MultiplierSpec":
        return cls(kind="fractional_gradient", order=order)

    @classmethod
    def bracket_gradient(cls, order: float) -> "MultiplierSpec":
        return cls(kind="bracket_gradient", order=order)

    @classmethod
    def custom(cls, symbol: Callable[[np.ndarray], np.ndarray]) -> "MultiplierSpec":
        return cls(kind="custom", symbol=symbol)


class StepConfig(BaseModel):
    """Time stepping parameters for the split-step integrator."""

    model_config = ConfigDict(frozen=True)

    dt: float = ModelField(gt=0)
    t_final: float = ModelField(gt=0)
    snapshot_stride: int = ModelField(default=1, ge=1)
    dealias: bool = False  # low_pass at 2/3 Nyquist after each nonlinear substep
    fuse_phases: bool = True  # ignored when dealias is on
    blowup_factor: float = ModelField(default=1e3, gt=1)

    @model_validator(mode="after")
    def _check_step_count(self) -> "StepConfig":
        if self.dt > self.t_final:
            raise ValueError(f"dt={self.dt} exceeds t_final={self.t_final}")
        ratio = self.t_final / self.dt
        if abs(ratio - round(ratio)) > STEP_COUNT_TOLERANCE * max(1.0, ratio):
            raise ValueError(
                f"t_final/dt = {ratio!r} is not an integer step count (dt={self.dt}, t_final={self.t_final})"
            )
        return self

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))


class Trajectory(BaseModel):
    """Time-ordered snapshots of one evolution."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: Grid
    n: int
    config: StepConfig
    times: tuple[float, ...]
    states: tuple[Field, ...]

    @model_validator(mode="after")
    def _check_snapshots(self) -> "Trajectory":
        if self.n != self.grid.n:
            raise ValueError(f"Trajectory dimension {self.n} does not match grid dimension {self.grid.n}")
        if len(self.times) != len(self.states) or not self.times:
            raise ValueError("Trajectory needs one state per snapshot time")
        if self.times[0] != 0.0:
            raise ValueError(f"First snapshot time must be 0, got {self.times[0]}")
        if any(later <= earlier for earlier, later in zip(self.times, self.times[1:])):
            raise ValueError("Snapshot times must be strictly increasing")
        if abs(self.times[-1] - self.config.t_final) > STEP_COUNT_TOLERANCE * max(1.0, self.config.t_final):
            raise ValueError(f"Last snapshot time {self.times[-1]} != t_final {self.config.t_final}")
        return self

    @property
    def initial(self) -> Field:
        return self.states[0]

    @property
    def final(self) -> Field:
        return self.states[-1]

    def time_array(self) -> np.ndarray:
        return np.asarray(self.times, dtype=float)


class EnergyTerms(BaseModel):
    """Kinetic and potential parts of the energy."""

    kinetic: float
    potential: float

    @computed_field  # type: ignore[prop-decorator]
    @property
    def total(self) -> float:
        return self.kinetic + self.potential


def _exact(value: float) -> Fraction:
    return Fraction(value).limit_denominator(10**6)


class AdmissiblePair(BaseModel):
    """Strichartz pair satisfying 2/p = n*(1/2 - 1/q) with p >= 2."""

    model_config = ConfigDict(frozen=True)

    p: float
    q: float
    n: int = ModelField(ge=1, le=4)

    @model_validator(mode="after")
    def _check_scaling(self) -> "AdmissiblePair":
        if self.p < 2:
            raise ValueError(f"p must be >= 2, got {self.p}")
        if self.q < 2:
            raise ValueError(f"q must be >= 2, got {self.q}")
        left = Fraction(0) if math.isinf(self.p) else Fraction(2) / _exact(self.p)
        right = Fraction(0) if math.isinf(self.q) else 1 / _exact(self.q)
        right = self.n * (Fraction(1, 2) - right)
        if left != right:
            raise ValueError(f"({self.p}, {self.q}) is not admissible in dimension {self.n}")
        return self

    @property
    def label(self) -> str:
        def fmt(value: float) -> str:
            return "inf" if math.isinf(value) else str(_exact(value))

        return f"({fmt(self.p)},{fmt(self.q)})"


class SpacetimeNorm(BaseModel):
    """Value of ||u||_{L_t^p L_x^q} over [t1, t2]."""

    p: float
    q: float
    t1: float
    t2: float
    value: float = ModelField(ge=0)
    quadrature: Literal["trapezoid"] = "trapezoid"


class CheckReport(BaseModel):
    """Structured outcome of one verification.

    `status` is derived from the measured values and tolerance only. FAIL on
    a `hard` report makes the CLI exit nonzero; INCONCLUSIVE never does.
    """

    name: str
    status: CheckStatus
    hard: bool = True
    inputs: dict[str, Any] = ModelField(default_factory=dict)
    measured: dict[str, Any] = ModelField(default_factory=dict)
    bound_lhs: float | None = None
    bound_rhs: float | None = None
    ratio: float | None = None
    slope: float | None = None
    tolerance: float | None = None
    notes: list[str] = ModelField(default_factory=list)

    @computed_field  # type: ignore[prop-decorator]
    @property
    def passed(self) -> bool:
        return self.status == "PASS"


class RoughDataSpec(BaseModel):
    """Power-law spectrum with seeded uniform phases.

    With `envelope_width` set the datum is localized: a real Gaussian core of
    peak `amplitude` times (1 + roughness * R / max|R|), where R is the unit
    power-law series. Without it the series fills the box at `amplitude`.
    """

    model_config = ConfigDict(frozen=True)

    s: float = ModelField(gt=0, le=1)
    delta: float = ModelField(default=0.05, gt=0)
    amplitude: float = 1.0
    seed: int = ModelField(default=0, ge=0)
    envelope_width: float | None = ModelField(default=None, gt=0)
    roughness: float = ModelField(default=0.5, gt=0, lt=1)


class IncrementTerms(BaseModel):
    """E(Iu) at one state with the two parts of its time derivative.

    `linear` pairs the commutator with I Laplacian(u), `nonlinear` with
    I(|u|^(4/n) u); their sum is d/dt E(Iu).
    """

    model_config = ConfigDict(frozen=True)

    modified_energy: float
    linear: float
    nonlinear: float

    @computed_field  # type: ignore[prop-decorator]
    @property
    def rate(self) -> float:
        return self.linear + self.nonlinear


class SweepPoint(BaseModel):
    """Modified-energy measurements for one N along a trajectory.

    `sup_linear` and `sup_nonlinear` are sup_t |int_0^t part| for the two
    parts of the increment rate.
    """

    N: float
    s: float
    is_control: bool
    initial_energy: float
    sup_increment: float
    endpoint_change: float
    integrated_rate: float
    sup_linear: float | None = None
    sup_nonlinear: float | None = None

    @computed_field  # type: ignore[prop-decorator]
    @property
    def consistency(self) -> float | None:
        """Relative gap between the integrated rate and the endpoint change."""
        if self.endpoint_change == 0.0:
            return None
        return abs(self.integrated_rate - self.endpoint_change) / abs(self.endpoint_change)
