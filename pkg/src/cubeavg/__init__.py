"""Exact cube averages and box seminorms on finite measure-preserving systems."""

from .kernels import BACKEND
from .systems import (
    Observable,
    ProbabilitySpace,
    System,
    Transformation,
    orbit_order,
    transformation_power_action,
    validate_system,
)

__version__ = "0.1.0"
