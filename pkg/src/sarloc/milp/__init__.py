"""Exact location-allocation model: instance building, an embedded two-phase
simplex, branch-and-bound search, and the weighted-sum trade-off sweep."""

from .instance import DemandNode, Instance, Scope, build_instance
from .pareto import (
    CrossEvaluation,
    ParetoFront,
    ParetoPoint,
    SweepEntry,
    cross_evaluate,
    default_weight_grid,
    pareto_sweep,
    write_front_csv,
)
from .simplex import LinearProgram, LPResult, LPStatus, lp_solve
from .solver import Solution, SolveStats, SolveStatus, solve

__all__ = [
    "CrossEvaluation",
    "DemandNode",
    "Instance",
    "LPResult",
    "LPStatus",
    "LinearProgram",
    "ParetoFront",
    "ParetoPoint",
    "Scope",
    "Solution",
    "SolveStats",
    "SolveStatus",
    "SweepEntry",
    "build_instance",
    "cross_evaluate",
    "default_weight_grid",
    "lp_solve",
    "pareto_sweep",
    "solve",
    "write_front_csv",
]
