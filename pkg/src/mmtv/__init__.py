"""Piecewise-constant mean filtering with convexity-preserving nonconvex penalties."""

__version__ = "0.1.0"

from .mm_solver import PwcFit, SolverConfig, l1_fit, solve_mm  # noqa: E402
from .penalties import PenaltyKind, PenaltySpec  # noqa: E402
from .taut_string import solve as tv_prox  # noqa: E402
from .taut_string import solve_l1_filter  # noqa: E402

__all__ = [
    "PenaltyKind",
    "PenaltySpec",
    "PwcFit",
    "SolverConfig",
    "l1_fit",
    "solve_l1_filter",
    "solve_mm",
    "tv_prox",
]
