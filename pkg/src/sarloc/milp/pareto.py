"""Weighted-sum trade-off sweep and fixed-location robustness checks.

Sweeping the weight grid traces the relocation-cost versus response-time
frontier; exact scalarized optima make the swept objective values monotone
in the weights, which is asserted on every run as a solver self-check.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .instance import Instance
from .solver import Solution, SolveStatus, _solve_scalarized, solve

DEFAULT_DELTA = 0.00005  # near-zero endpoint weight; exact zeros are prohibited
VALUE_TOL = 1e-9  # objective values closer than this count as equal
MONOTONE_TOL = 1e-6


def default_weight_grid(delta: float = DEFAULT_DELTA) -> tuple[tuple[float, float], ...]:
    """0.2-step weight grid with delta-shifted endpoints, ordered by rising
    relocation priority."""
    if not 0.0 < delta < 0.2:
        raise ValueError("delta must sit strictly between 0 and 0.2")
    return (
        (delta, 1.0 - delta),
        (0.2, 0.8),
        (0.4, 0.6),
        (0.6, 0.4),
        (0.8, 0.2),
        (1.0 - delta, delta),
    )


@dataclass(frozen=True)
class SweepEntry:
    w1: float
    w2: float
    solution: Solution
    dominated: bool


@dataclass(frozen=True)
class ParetoPoint:
    f1: float
    f2: float
    solution: Solution
    weights: tuple[tuple[float, float], ...]  # every grid weight that produced it


@dataclass(frozen=True)
class ParetoFront:
    points: tuple[ParetoPoint, ...]  # mutually non-dominated, ascending f1
    sweep: tuple[SweepEntry, ...]


class InfeasibleModelError(RuntimeError):
    def __init__(self, solution: Solution):
        super().__init__(solution.infeasible_reason or "model infeasible")
        self.solution = solution


def _dominates(a: tuple[float, float], b: tuple[float, float]) -> bool:
    return (
        a[0] <= b[0] + VALUE_TOL
        and a[1] <= b[1] + VALUE_TOL
        and (a[0] < b[0] - VALUE_TOL or a[1] < b[1] - VALUE_TOL)
    )


def pareto_sweep(
    instance: Instance,
    weight_grid: Sequence[tuple[float, float]] | None = None,
) -> ParetoFront:
    """Solve every weight in the grid and keep the non-dominated outcomes.

    Identical (f1, f2) pairs produced by several weights collapse into one
    front point that remembers all of its weights.
    """
    grid = tuple(weight_grid) if weight_grid is not None else default_weight_grid()
    if not grid:
        raise ValueError("weight grid must not be empty")
    solutions: list[tuple[tuple[float, float], Solution]] = []
    for w in grid:
        sol = solve(instance, w)
        if sol.status is SolveStatus.INFEASIBLE:
            # Feasibility does not depend on the weights, so any failure is
            # final for the whole sweep.
            raise InfeasibleModelError(sol)
        solutions.append((w, sol))

    ordered = sorted(solutions, key=lambda item: item[0][0])
    for (w_lo, lo), (w_hi, hi) in zip(ordered, ordered[1:]):
        assert lo.f1 >= hi.f1 - MONOTONE_TOL, (
            f"f1 rose from {lo.f1} to {hi.f1} as w1 went {w_lo[0]} -> {w_hi[0]}"
        )
        assert lo.f2 <= hi.f2 + MONOTONE_TOL, (
            f"f2 fell from {lo.f2} to {hi.f2} as w1 went {w_lo[0]} -> {w_hi[0]}"
        )

    # Collapse identical objective pairs, keeping the first solution found.
    grouped: dict[tuple[float, float], tuple[Solution, list[tuple[float, float]]]] = {}
    for w, sol in solutions:
        key = (round(sol.f1 / VALUE_TOL) * VALUE_TOL, round(sol.f2 / VALUE_TOL) * VALUE_TOL)
        if key in grouped:
            grouped[key][1].append(w)
        else:
            grouped[key] = (sol, [w])

    keys = list(grouped)
    dominated_keys = {
        k for k in keys if any(other != k and _dominates(other, k) for other in keys)
    }
    points = tuple(
        sorted(
            (
                ParetoPoint(sol.f1, sol.f2, sol, tuple(ws))
                for key, (sol, ws) in grouped.items()
                if key not in dominated_keys
            ),
            key=lambda p: (p.f1, p.f2),
        )
    )
    sweep = tuple(
        SweepEntry(
            w1=w1,
            w2=w2,
            solution=sol,
            dominated=(
                (round(sol.f1 / VALUE_TOL) * VALUE_TOL, round(sol.f2 / VALUE_TOL) * VALUE_TOL)
                in dominated_keys
            ),
        )
        for (w1, w2), sol in solutions
    )
    return ParetoFront(points=points, sweep=sweep)


def write_front_csv(front: ParetoFront, path: str | Path) -> None:
    """One row per swept weight: w1, w2, f1, f2, dominated flag."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["w1", "w2", "f1_relocation_hours", "f2_deployment_hours", "dominated"])
        for entry in front.sweep:
            writer.writerow(
                [
                    repr(entry.w1),
                    repr(entry.w2),
                    repr(entry.solution.f1),
                    repr(entry.solution.f2),
                    int(entry.dominated),
                ]
            )


@dataclass(frozen=True)
class CrossEvaluation:
    """Outcome of serving one demand scenario from locations optimized for
    another."""

    feasible: bool
    f2: float | None
    locations: dict[str, str]
    base_solution: Solution

    def to_json(self) -> dict:
        return {
            "feasible": self.feasible,
            "f2_deployment_hours": self.f2,
            "locations": dict(sorted(self.locations.items())),
        }


def cross_evaluate(
    instance_a: Instance,
    instance_b: Instance,
    weights: tuple[float, float],
) -> CrossEvaluation:
    """Optimize locations on ``instance_a``, freeze them, and re-solve the
    allocation alone against ``instance_b``'s demands.

    Infeasibility of the frozen posture under the new demands is reported,
    not raised.
    """
    if [a.id for a in instance_a.assets] != [a.id for a in instance_b.assets]:
        raise ValueError("instances must share the same asset fleet")
    if [p.id for p in instance_a.homeports] != [p.id for p in instance_b.homeports]:
        raise ValueError("instances must share the same homeport set")

    sol_a = solve(instance_a, weights)
    if sol_a.status is SolveStatus.INFEASIBLE:
        raise InfeasibleModelError(sol_a)
    reallocated = _solve_scalarized(instance_b, 0.0, 1.0, fixed_x=sol_a.x)
    if reallocated.status is SolveStatus.INFEASIBLE:
        return CrossEvaluation(feasible=False, f2=None, locations=sol_a.x, base_solution=sol_a)
    return CrossEvaluation(
        feasible=True, f2=reallocated.f2, locations=sol_a.x, base_solution=sol_a
    )
