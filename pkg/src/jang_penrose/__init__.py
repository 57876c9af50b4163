"""Generalized Jang equation solver and Penrose inequality verifier for
spherically symmetric initial data."""

__version__ = "0.1.0"

from .data import (  # noqa: E402
    DataError,
    Horizon,
    HorizonError,
    InitialData,
    build_builtin,
    check_dec,
    check_falloff,
    classify_horizon,
    energy_momentum,
    find_outermost_horizon,
    load_sampled,
    null_expansions,
    scalar_curvature_g,
)
from .solver import SolverConfig, SolverError, solve  # noqa: E402

__all__ = [
    "DataError", "Horizon", "HorizonError", "InitialData", "SolverConfig", "SolverError",
    "build_builtin", "check_dec", "check_falloff", "classify_horizon", "energy_momentum",
    "find_outermost_horizon", "load_sampled", "null_expansions", "scalar_curvature_g",
    "solve",
]
