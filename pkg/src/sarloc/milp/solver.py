"""Exact branch-and-bound over the location-allocation integer program.

Variables are pruned to compatible asset/homeport pairs up front, the linear
relaxation at every node is solved by the embedded two-phase simplex, and
branching goes depth-first: location variables before allocation variables,
most-fractional first, exploring the rounding-preferred child before its
sibling.  Incumbents are only ever accepted after an exact integer
re-verification of every constraint, so a returned optimum is certified.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from ..fleet import compatible
from .instance import CATEGORIES, Instance, capacity_shortfalls
from .simplex import LinearProgram, LPStatus, lp_solve

INT_TOL = 1e-6  # how far from an integer an LP value may sit
PRUNE_EPS = 1e-9  # nodes within this of the incumbent cannot improve it
CAPACITY_TOL = 1e-6  # slack allowed on the hour-valued capacity rows


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    BOUNDED_GAP = "bounded_gap"


@dataclass
class SolveStats:
    nodes: int = 0
    lp_iterations: int = 0
    wall_time_s: float = 0.0
    gap: float = 0.0


@dataclass
class Solution:
    status: SolveStatus
    weights: tuple[float, float]
    x: dict[str, str] = field(default_factory=dict)  # asset -> homeport
    y: dict[tuple[str, str, str], int] = field(default_factory=dict)
    f1: float = 0.0
    f2: float = 0.0
    weighted_objective: float = 0.0
    bound_gap: float = 0.0
    stats: SolveStats = field(default_factory=SolveStats)
    infeasible_reason: str | None = None

    def verify(self, instance: Instance) -> None:
        """Re-check every model constraint from the integer solution."""
        if self.status is not SolveStatus.OPTIMAL and self.status is not SolveStatus.BOUNDED_GAP:
            raise ValueError("only feasible solutions can be verified")
        port_by_id = {p.id: p for p in instance.homeports}
        assigned: dict[str, str] = {}
        for a in instance.assets:
            port_id = self.x.get(a.id)
            if port_id is None:
                raise AssertionError(f"asset {a.id} has no homeport")
            port = port_by_id[port_id]
            if not compatible(a.category, port.kind):
                raise AssertionError(f"forbidden assignment {a.id} -> {port_id}")
            assigned[a.id] = port_id
        if len(self.x) != len(instance.assets):
            raise AssertionError("x assigns an unknown asset")

        served: dict[tuple[str, str], int] = {}
        events_per_asset: dict[str, int] = {a.id: 0 for a in instance.assets}
        hours_per_asset: dict[str, float] = {a.id: 0.0 for a in instance.assets}
        asset_idx = {a.id: i for i, a in enumerate(instance.assets)}
        port_idx = {p.id: i for i, p in enumerate(instance.homeports)}
        zone_idx = {z.zone_id: i for i, z in enumerate(instance.zones)}
        for (asset_id, port_id, zone_id), count in self.y.items():
            if count < 0:
                raise AssertionError("negative allocation")
            if count == 0:
                continue
            if assigned[asset_id] != port_id:
                raise AssertionError(f"{asset_id} deploys from {port_id} but sits at {assigned[asset_id]}")
            ai, pi, zi = asset_idx[asset_id], port_idx[port_id], zone_idx[zone_id]
            cat = instance.assets[ai].category
            served[(zone_id, cat.value)] = served.get((zone_id, cat.value), 0) + count
            events_per_asset[asset_id] += count
            d = instance.deploy_hours[ai, pi, zi]
            hours_per_asset[asset_id] += (2.0 * d + instance.mission_hours) * count
        for zi, zone in enumerate(instance.zones):
            for ci, cat in enumerate(CATEGORIES):
                required = int(instance.demand[zi, ci])
                if served.get((zone.zone_id, cat.value), 0) < required:
                    raise AssertionError(f"demand unmet at {zone.zone_id} for {cat.value}")
        for a in instance.assets:
            if events_per_asset[a.id] > int(instance.q_events[asset_idx[a.id]]):
                raise AssertionError(f"{a.id} exceeds its event cap")
            if hours_per_asset[a.id] > a.monthly_hours + CAPACITY_TOL:
                raise AssertionError(f"{a.id} exceeds its monthly hours")

    def to_json(self) -> dict:
        return {
            "status": self.status.value,
            "weights": list(self.weights),
            "f1_relocation_hours": self.f1,
            "f2_deployment_hours": self.f2,
            "weighted_objective": self.weighted_objective,
            "bound_gap": self.bound_gap,
            "x": dict(sorted(self.x.items())),
            "y": [
                {"asset": a, "homeport": p, "zone": z, "events": c}
                for (a, p, z), c in sorted(self.y.items())
                if c > 0
            ],
            "stats": {"nodes": self.stats.nodes, "lp_iterations": self.stats.lp_iterations},
            "infeasible_reason": self.infeasible_reason,
        }


class _Model:
    """Instance compiled to dense LP blocks over pruned variables."""

    def __init__(self, instance: Instance, w1: float, w2: float):
        self.instance = instance
        inst = instance
        self.x_pairs: list[tuple[int, int]] = [
            (a, p)
            for a in range(inst.n_assets)
            for p in range(inst.n_ports)
            if inst.compat[a, p]
        ]
        self.n_x = len(self.x_pairs)
        self.n_z = inst.n_zones
        self.n_vars = self.n_x + self.n_x * self.n_z

        n = self.n_vars
        # f1 costs sit on x variables, f2 costs on y variables.
        self.c1 = np.zeros(n)
        self.c2 = np.zeros(n)
        for k, (a, p) in enumerate(self.x_pairs):
            self.c1[k] = inst.reloc_hours[a, p]
            self.c2[self._y_slice(k)] = inst.deploy_hours[a, p, :]
        self.cost = w1 * self.c1 + w2 * self.c2

        # One-homeport-per-asset equalities.
        self.a_eq = np.zeros((inst.n_assets, n))
        for k, (a, _) in enumerate(self.x_pairs):
            self.a_eq[a, k] = 1.0
        self.b_eq = np.ones(inst.n_assets)

        ub_rows: list[np.ndarray] = []
        ub_rhs: list[float] = []
        # Demand coverage (as <= rows with negated sign).
        self.demand_rows: list[tuple[int, int]] = []
        for zi in range(inst.n_zones):
            for ci, cat in enumerate(CATEGORIES):
                level = int(inst.demand[zi, ci])
                if level == 0:
                    continue
                row = np.zeros(n)
                for k, (a, _) in enumerate(self.x_pairs):
                    if inst.assets[a].category is cat:
                        row[self.n_x + k * self.n_z + zi] = -1.0
                ub_rows.append(row)
                ub_rhs.append(-float(level))
                self.demand_rows.append((zi, ci))
        # Linking: an unassigned pair deploys nothing.
        for k, (a, _) in enumerate(self.x_pairs):
            row = np.zeros(n)
            row[self._y_slice(k)] = 1.0
            row[k] = -float(inst.q_events[a])
            ub_rows.append(row)
            ub_rhs.append(0.0)
        # Monthly utilization per asset.
        for a in range(inst.n_assets):
            row = np.zeros(n)
            for k, (a2, p) in enumerate(self.x_pairs):
                if a2 == a:
                    row[self._y_slice(k)] = 2.0 * inst.deploy_hours[a, p, :] + inst.mission_hours
            ub_rows.append(row)
            ub_rhs.append(inst.assets[a].monthly_hours)
        self.a_ub = np.vstack(ub_rows) if ub_rows else np.zeros((0, n))
        self.b_ub = np.array(ub_rhs)

        self.root_lb = np.zeros(n)
        self.root_ub = np.empty(n)
        self.root_ub[: self.n_x] = 1.0
        for k, (a, _) in enumerate(self.x_pairs):
            self.root_ub[self._y_slice(k)] = float(inst.q_events[a])

    def _y_slice(self, k: int) -> slice:
        start = self.n_x + k * self.n_z
        return slice(start, start + self.n_z)

    def node_lp(self, lb: np.ndarray, ub: np.ndarray) -> tuple[LinearProgram, np.ndarray, float]:
        """Shift lower bounds into the rhs, drop fixed columns, and add
        explicit rows only for branched-down y upper bounds."""
        free = ub - lb > 0.5
        b_eq = self.b_eq - self.a_eq @ lb
        b_ub = self.b_ub - self.a_ub @ lb
        a_eq = self.a_eq[:, free]
        a_ub = self.a_ub[:, free]

        tightened = np.flatnonzero(free & (ub < self.root_ub))
        if len(tightened):
            free_pos = np.cumsum(free) - 1
            extra = np.zeros((len(tightened), a_ub.shape[1]))
            extra_rhs = np.empty(len(tightened))
            for r, v in enumerate(tightened):
                extra[r, free_pos[v]] = 1.0
                extra_rhs[r] = ub[v] - lb[v]
            a_ub = np.vstack([a_ub, extra])
            b_ub = np.concatenate([b_ub, extra_rhs])

        lp = LinearProgram(c=self.cost[free], a_ub=a_ub, b_ub=b_ub, a_eq=a_eq, b_eq=b_eq)
        return lp, free, float(self.cost @ lb)

    def exact_objectives(self, values: np.ndarray) -> tuple[float, float]:
        return float(self.c1 @ values), float(self.c2 @ values)

    def feasible_exactly(self, values: np.ndarray) -> bool:
        inst = self.instance
        ints = np.rint(values).astype(np.int64)
        if np.any(ints < 0):
            return False
        x = ints[: self.n_x]
        per_asset = np.zeros(inst.n_assets, dtype=np.int64)
        for k, (a, _) in enumerate(self.x_pairs):
            per_asset[a] += x[k]
        if np.any(per_asset != 1):
            return False
        for k, (a, _) in enumerate(self.x_pairs):
            ys = ints[self._y_slice(k)]
            if ys.sum() > int(inst.q_events[a]) * x[k]:
                return False
        for zi, ci in self.demand_rows:
            cat = CATEGORIES[ci]
            total = sum(
                int(ints[self.n_x + k * self.n_z + zi])
                for k, (a, _) in enumerate(self.x_pairs)
                if inst.assets[a].category is cat
            )
            if total < int(inst.demand[zi, ci]):
                return False
        for a in range(inst.n_assets):
            hours = 0.0
            for k, (a2, p) in enumerate(self.x_pairs):
                if a2 == a:
                    ys = ints[self._y_slice(k)]
                    if ys.any():
                        d = inst.deploy_hours[a, p, :]
                        hours += float((2.0 * d + inst.mission_hours) @ ys)
            if hours > inst.assets[a].monthly_hours + CAPACITY_TOL:
                return False
        return True

    def to_solution(
        self,
        values: np.ndarray,
        status: SolveStatus,
        weights: tuple[float, float],
        stats: SolveStats,
        bound_gap: float = 0.0,
    ) -> Solution:
        inst = self.instance
        ints = np.rint(values).astype(np.int64)
        x_map: dict[str, str] = {}
        y_map: dict[tuple[str, str, str], int] = {}
        for k, (a, p) in enumerate(self.x_pairs):
            if ints[k] == 1:
                x_map[inst.assets[a].id] = inst.homeports[p].id
            ys = ints[self._y_slice(k)]
            for zi in np.flatnonzero(ys):
                y_map[(inst.assets[a].id, inst.homeports[p].id, inst.zones[zi].zone_id)] = int(
                    ys[zi]
                )
        f1, f2 = self.exact_objectives(ints.astype(float))
        w1, w2 = weights
        return Solution(
            status=status,
            weights=weights,
            x=x_map,
            y=y_map,
            f1=f1,
            f2=f2,
            weighted_objective=w1 * f1 + w2 * f2,
            bound_gap=bound_gap,
            stats=stats,
        )


def _greedy_candidate(model: _Model, port_choice: dict[int, int]) -> np.ndarray | None:
    """Feasible full-variable vector for a fixed homeport per asset, filling
    demands cheapest-deployment-first, or None when the fill gets stuck."""
    inst = model.instance
    values = np.zeros(model.n_vars)
    pair_of_asset: dict[int, int] = {}
    for k, (a, p) in enumerate(model.x_pairs):
        if port_choice.get(a) == p:
            values[k] = 1.0
            pair_of_asset[a] = k
    if len(pair_of_asset) != inst.n_assets:
        return None
    hours_left = np.array([a.monthly_hours for a in inst.assets])
    events_left = inst.q_events.astype(np.int64).copy()
    for zi, ci in model.demand_rows:
        cat = CATEGORIES[ci]
        for _ in range(int(inst.demand[zi, ci])):
            best: tuple[float, int] | None = None
            for a in inst.category_assets(cat):
                k = pair_of_asset[a]
                d = float(inst.deploy_hours[a, model.x_pairs[k][1], zi])
                cost_h = 2.0 * d + inst.mission_hours
                if events_left[a] >= 1 and hours_left[a] >= cost_h - 1e-12:
                    if best is None or (d, a) < best:
                        best = (d, a)
            if best is None:
                return None
            _, a = best
            k = pair_of_asset[a]
            d = float(inst.deploy_hours[a, model.x_pairs[k][1], zi])
            values[model.n_x + k * model.n_z + zi] += 1.0
            hours_left[a] -= 2.0 * d + inst.mission_hours
            events_left[a] -= 1
    return values


@dataclass
class _Node:
    lb: np.ndarray
    ub: np.ndarray
    depth: int
    est: float = -math.inf  # bound of the parent relaxation


def solve(
    instance: Instance,
    weights: tuple[float, float],
    node_limit: int | None = None,
    fixed_x: Mapping[str, str] | None = None,
) -> Solution:
    """Minimize w1*f1 + w2*f2 exactly; returns the proven optimum (both
    objective values reported unweighted) or an infeasibility certificate.

    ``fixed_x`` pins assets to homeports so pure allocation subproblems (the
    robustness cross-check) reuse the same machinery.
    """
    w1, w2 = float(weights[0]), float(weights[1])
    if w1 < 0.0 or w2 < 0.0:
        raise ValueError("objective weights must be non-negative")
    if abs(w1 + w2 - 1.0) > 1e-9:
        raise ValueError(f"objective weights must sum to 1, got {w1 + w2}")
    return _solve_scalarized(instance, w1, w2, node_limit=node_limit, fixed_x=fixed_x)


def _solve_scalarized(
    instance: Instance,
    w1: float,
    w2: float,
    node_limit: int | None = None,
    fixed_x: Mapping[str, str] | None = None,
) -> Solution:
    start = time.perf_counter()
    stats = SolveStats()

    shortfalls = capacity_shortfalls(instance)
    if shortfalls:
        stats.wall_time_s = time.perf_counter() - start
        return Solution(
            status=SolveStatus.INFEASIBLE,
            weights=(w1, w2),
            stats=stats,
            infeasible_reason="; ".join(shortfalls),
        )

    model = _Model(instance, w1, w2)
    lb = model.root_lb.copy()
    ub = model.root_ub.copy()

    if fixed_x is not None:
        asset_idx = {a.id: i for i, a in enumerate(instance.assets)}
        port_idx = {p.id: i for i, p in enumerate(instance.homeports)}
        pair_lookup = {pair: k for k, pair in enumerate(model.x_pairs)}
        for asset_id, port_id in fixed_x.items():
            if asset_id not in asset_idx or port_id not in port_idx:
                raise ValueError(f"cannot fix unknown pair {asset_id} -> {port_id}")
            a = asset_idx[asset_id]
            target = pair_lookup.get((a, port_idx[port_id]))
            if target is None:
                raise ValueError(f"cannot fix {asset_id} to incompatible port {port_id}")
            for k, (a2, _) in enumerate(model.x_pairs):
                if a2 == a:
                    lb[k], ub[k] = 0.0, 0.0
            lb[target], ub[target] = 1.0, 1.0

    incumbent: np.ndarray | None = None
    incumbent_obj = math.inf

    def try_candidate(values: np.ndarray | None) -> None:
        nonlocal incumbent, incumbent_obj
        if values is None or not model.feasible_exactly(values):
            return
        obj = float(model.cost @ np.rint(values))
        if obj < incumbent_obj - PRUNE_EPS:
            incumbent, incumbent_obj = np.rint(values), obj

    # Incumbent seeds: keep-everything-where-it-is, plus the demand fill.
    current_choice = {
        i: next(p for p, port in enumerate(instance.homeports) if port.id == a.current_homeport)
        for i, a in enumerate(instance.assets)
    }
    if fixed_x is None:
        try_candidate(_greedy_candidate(model, current_choice))

    open_nodes: list[_Node] = [_Node(lb, ub, 0)]
    best_open_bound = math.inf
    limit_hit = False

    while open_nodes:
        if node_limit is not None and stats.nodes >= node_limit:
            limit_hit = True
            best_open_bound = min(n.est for n in open_nodes)
            break
        node = open_nodes.pop()
        stats.nodes += 1
        lp, free, const = model.node_lp(node.lb, node.ub)
        result = lp_solve(lp)
        stats.lp_iterations += result.iterations
        if result.status is LPStatus.INFEASIBLE:
            continue
        if result.status is LPStatus.UNBOUNDED:
            raise ArithmeticError("relaxation unbounded; model construction is broken")
        bound = result.objective + const
        if bound >= incumbent_obj - PRUNE_EPS:
            continue

        values = node.lb.copy()
        values[free] += result.x
        frac = np.abs(values - np.rint(values))

        if stats.nodes == 1 and fixed_x is None:
            # Round the root relaxation into a second incumbent seed.
            choice: dict[int, int] = {}
            for a in range(instance.n_assets):
                ks = [k for k, (a2, _) in enumerate(model.x_pairs) if a2 == a]
                best_k = max(ks, key=lambda k: (values[k], -k))
                choice[a] = model.x_pairs[best_k][1]
            try_candidate(_greedy_candidate(model, choice))
            if bound >= incumbent_obj - PRUNE_EPS:
                continue

        fractional = np.flatnonzero(frac > INT_TOL)
        if len(fractional) == 0:
            candidate = np.rint(values)
            if model.feasible_exactly(candidate):
                obj = float(model.cost @ candidate)
                assert bound <= obj + 1e-6, "LP bound exceeded its own integer solution"
                if obj < incumbent_obj - PRUNE_EPS:
                    incumbent, incumbent_obj = candidate, obj
                continue
            # Numerically integral but not exactly feasible: branch on the
            # least-integral variable to split the node anyway.
            fractional = np.array([int(np.argmax(frac))])

        x_frac = fractional[fractional < model.n_x]
        pool = x_frac if len(x_frac) else fractional
        scores = np.minimum(frac[pool], 1.0 - frac[pool])
        var = int(pool[np.argmax(scores)])
        val = values[var]

        down = _Node(node.lb.copy(), node.ub.copy(), node.depth + 1, est=bound)
        down.ub[var] = math.floor(val)
        up = _Node(node.lb.copy(), node.ub.copy(), node.depth + 1, est=bound)
        up.lb[var] = math.ceil(val)
        if val - math.floor(val) >= 0.5:
            open_nodes.extend([down, up])  # explore the up child first
        else:
            open_nodes.extend([up, down])

    stats.wall_time_s = time.perf_counter() - start
    if incumbent is None:
        return Solution(
            status=SolveStatus.INFEASIBLE,
            weights=(w1, w2),
            stats=stats,
            infeasible_reason="proven by exhaustive branch-and-bound",
        )
    status = SolveStatus.OPTIMAL
    gap = 0.0
    if limit_hit:
        status = SolveStatus.BOUNDED_GAP
        if math.isfinite(best_open_bound):
            gap = max(0.0, (incumbent_obj - best_open_bound) / max(1.0, abs(incumbent_obj)))
        else:
            gap = 1.0
    stats.gap = gap
    return model.to_solution(incumbent, status, (w1, w2), stats, bound_gap=gap)
