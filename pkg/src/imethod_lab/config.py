"""Run configuration: JSON documents validated into pydantic models."""

import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator
from pydantic import Field as ModelField

from .types import Grid, RoughDataSpec, StepConfig

logger = logging.getLogger(__name__)

THREADS_ENV_VAR = "IMETHOD_LAB_THREADS"


class ConfigError(ValueError):
    """Configuration could not be read or validated."""


def worker_count() -> int:
    """Worker cap for sweeps and FFTs, from IMETHOD_LAB_THREADS (default: CPU count)."""
    default = os.cpu_count() or 1
    raw = os.getenv(THREADS_ENV_VAR)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        logger.warning(f"Ignoring {THREADS_ENV_VAR}={raw!r}: not an integer")
        return default
    if value < 1:
        logger.warning(f"Ignoring {THREADS_ENV_VAR}={raw!r}: must be >= 1")
        return default
    return value


class InitialDataSpec(BaseModel):
    """Initial datum description.

    gaussian: amplitude * exp(-|x - center|^2 / width^2), optionally times
    exp(i wavevector . x). plane_wave: amplitude * exp(i wavevector . x).
    rough: power-law spectrum of regularity `s` with seeded phases; with
    `envelope_width` the rough series modulates a Gaussian core of peak
    `amplitude` at relative size `roughness`.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["gaussian", "plane_wave", "rough"]
    amplitude: float = 1.0
    width: float = ModelField(default=1.0, gt=0)
    center: list[float] | None = None
    wavevector: list[float] | None = None
    s: float | None = ModelField(default=None, gt=0, le=1)
    delta: float = ModelField(default=0.05, gt=0)
    seed: int = ModelField(default=0, ge=0)
    envelope_width: float | None = ModelField(default=None, gt=0)
    roughness: float = ModelField(default=0.5, gt=0, lt=1)

    @model_validator(mode="after")
    def _check_kind(self) -> "InitialDataSpec":
        if self.kind == "plane_wave" and self.wavevector is None:
            raise ValueError("plane_wave initial data requires wavevector")
        if self.kind == "rough" and self.s is None:
            raise ValueError("rough initial data requires s")
        return self

    def rough_spec(self) -> RoughDataSpec:
        return RoughDataSpec(
            s=self.s,
            delta=self.delta,
            amplitude=self.amplitude,
            seed=self.seed,
            envelope_width=self.envelope_width,
            roughness=self.roughness,
        )


class CheckSpec(BaseModel):
    """One declared check with its tolerance or budget."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str
    tolerance: float | None = ModelField(default=None, gt=0)
    budget: float | None = ModelField(default=None, gt=0)
    params: dict[str, Any] = ModelField(default_factory=dict)

    @field_validator("name")
    @classmethod
    def _known_check(cls, value: str) -> str:
        from .checks.registry import CHECK_RUNNERS

        if value not in CHECK_RUNNERS:
            known = ", ".join(sorted(CHECK_RUNNERS))
            raise ValueError(f"unknown check {value!r} (known: {known})")
        return value


class RunConfig(BaseModel):
    """Complete description of one experiment."""

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    dimension: int = ModelField(ge=1, le=4)
    grid_points: int
    box_length: float = ModelField(gt=0)
    dt: float = ModelField(gt=0)
    t_final: float = ModelField(gt=0)
    snapshot_stride: int = ModelField(default=1, ge=1)
    dealias: bool = False
    s: float | None = ModelField(default=None, gt=0, le=1)
    N: float | None = ModelField(default=None, gt=0)
    N_list: list[float] | None = None
    lam: int | None = ModelField(default=None, alias="lambda", ge=1)
    initial_data: InitialDataSpec
    checks: list[CheckSpec] = ModelField(default_factory=list)
    output_dir: str

    @field_validator("N_list")
    @classmethod
    def _positive_thresholds(cls, value: list[float] | None) -> list[float] | None:
        if value is not None:
            if not value:
                raise ValueError("N_list must not be empty")
            if any(N <= 0 for N in value):
                raise ValueError("every N in N_list must be positive")
        return value

    @field_validator("lam")
    @classmethod
    def _power_of_two(cls, value: int | None) -> int | None:
        if value is not None and value & (value - 1):
            raise ValueError(f"lambda must be a power of two, got {value}")
        return value

    @model_validator(mode="after")
    def _check_consistency(self) -> "RunConfig":
        self.grid()
        self.step_config()
        if (self.N is not None or self.N_list is not None) and self.s is None:
            raise ValueError("s is required when N or N_list is set")
        return self

    def grid(self) -> Grid:
        return Grid(n=self.dimension, G=self.grid_points, L=self.box_length)

    def step_config(self) -> StepConfig:
        return StepConfig(
            dt=self.dt,
            t_final=self.t_final,
            snapshot_stride=self.snapshot_stride,
            dealias=self.dealias,
        )

    def thresholds(self) -> list[float]:
        """N_list if given, else [N], else empty."""
        if self.N_list is not None:
            return sorted(self.N_list)
        return [self.N] if self.N is not None else []

    def canonical_json(self) -> str:
        return json.dumps(
            self.model_dump(mode="json", by_alias=True),
            sort_keys=True,
            separators=(",", ":"),
        )

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:12]

    def with_overrides(self, output_dir: str | None = None, seed: int | None = None) -> "RunConfig":
        """Copy with CLI overrides applied."""
        data = self.model_dump(by_alias=True)
        if output_dir is not None:
            data["output_dir"] = output_dir
        if seed is not None:
            data["initial_data"]["seed"] = seed
        return RunConfig.model_validate(data)


def _format_validation_error(path: Path, error: ValidationError) -> str:
    lines = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<root>"
        lines.append(f"{path}: {location}: {item['msg']}")
    return "\n".join(lines)


def parse_config(text: str, path: Path | str = "<config>") -> RunConfig:
    """Parse and validate a JSON config document.

    Raises:
        ConfigError: With path:line:col for syntax errors, or path: field: message
            for schema errors
    """
    path = Path(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: <root>: expected a JSON object")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(_format_validation_error(path, e)) from e


def load_config(path: Path | str) -> RunConfig:
    """Read a config file from disk.

    Raises:
        ConfigError: If the file is missing, malformed or invalid
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"{path}: cannot read config: {e}") from e
    config = parse_config(text, path)
    logger.debug(f"Loaded config {path} (hash {config.config_hash()})")
    return config
