"""Lot-sizing and job-shop scheduling with a period-based learning effect."""

from .domain import (
    Instance,
    Solution,
    actual_processing_time,
    compute_tardiness,
    evaluate_objective,
    learning_multiplier,
    load_instance,
    load_solution,
)
from .errors import LotforgeError
from .validation import ViolationReport, validate_solution

__version__ = "0.1.0"

__all__ = [
    "Instance",
    "Solution",
    "LotforgeError",
    "ViolationReport",
    "actual_processing_time",
    "compute_tardiness",
    "evaluate_objective",
    "learning_multiplier",
    "load_instance",
    "load_solution",
    "validate_solution",
]
