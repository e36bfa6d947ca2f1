"""Exact p-center solving by iterative distance rounding and client clustering."""

from .engine import (
    IterationStats,
    SolveResult,
    SolverParams,
    SolveStats,
    solve_by_rounding,
)
from .instance import (
    Instance,
    InstanceError,
    Solution,
    brute_force_optimum,
    load_instance,
    parse_native,
    parse_tsplib,
    radius,
    to_native,
)

__version__ = "0.1.0"

__all__ = [
    "Instance",
    "InstanceError",
    "IterationStats",
    "Solution",
    "SolveResult",
    "SolveStats",
    "SolverParams",
    "brute_force_optimum",
    "load_instance",
    "parse_native",
    "parse_tsplib",
    "radius",
    "solve_by_rounding",
    "to_native",
    "__version__",
]
