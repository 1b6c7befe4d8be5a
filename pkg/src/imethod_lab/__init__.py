"""imethod-lab - pseudospectral NLS simulator and I-method verification harness."""

from .dynamics import SolverError, evolve, strang_step
from .spectral import apply_multiplier, make_grid, transform_forward, transform_inverse
from .types import CheckReport, Field, Grid, MultiplierSpec, StepConfig, Trajectory


__version__ = "0.1.0"

__all__ = [
    "CheckReport",
    "Field",
    "Grid",
    "MultiplierSpec",
    "SolverError",
    "StepConfig",
    "Trajectory",
    "apply_multiplier",
    "evolve",
    "make_grid",
    "strang_step",
    "transform_forward",
    "transform_inverse",
]
