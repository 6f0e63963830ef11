import numpy as np
import pytest

from sarloc.fleet import Asset, AssetCategory, Homeport, HomeportKind
from sarloc.geo import GeoPoint, haversine_nmi
from sarloc.mcsim import DemandScenario
from sarloc.milp import Scope, build_instance, cross_evaluate, solve
from sarloc.milp.instance import capacity_shortfalls
from sarloc.milp.solver import SolveStatus, _solve_scalarized
from sarloc.zoning import AssetClass

from oracles import brute_force_optimum, random_small_instance, random_weights

HONOLULU = GeoPoint.from_east(21.31, -157.87)
ZONE_POS = GeoPoint.from_east(21.0, -157.0)


def _one_boat_instance(level=1, scope=Scope.CURRENT_ONLY):
    assets = [Asset("B1", AssetCategory.BOAT, 20.0, 30.0, 120.0, "harbor-a")]
    ports = [
        Homeport("harbor-a", HomeportKind.HARBOR, HONOLULU),
        Homeport("harbor-b", HomeportKind.HARBOR, GeoPoint.from_east(20.9, -156.6)),
    ]
    scenario = DemandScenario(
        percentile=50,
        levels={("Z0", AssetCategory.BOAT): level, ("Z0", AssetCategory.HELICOPTER): 0},
        positions={"Z0": ZONE_POS},
        zone_classes={"Z0": AssetClass.BOAT_HELICOPTER},
    )
    return build_instance(assets, ports, scenario, 1.5, scope)


# ----------------------------- instance building -----------------------------


def test_relocation_zero_only_at_current_port():
    instance = _one_boat_instance(scope=Scope.PACIFIC_REGION)
    current = [p.id for p in instance.homeports].index("harbor-a")
    other = [p.id for p in instance.homeports].index("harbor-b")
    assert instance.reloc_hours[0, current] == 0.0
    assert instance.reloc_hours[0, other] > 0.0


def test_forbidden_pairs_never_become_variables():
    assets = [
        Asset("B1", AssetCategory.BOAT, 20.0, 30.0, 120.0, "harbor-a"),
        Asset("H1", AssetCategory.HELICOPTER, 120.0, 165.0, 100.0, "strip-a"),
    ]
    ports = [
        Homeport("harbor-a", HomeportKind.HARBOR, HONOLULU),
        Homeport("strip-a", HomeportKind.AIRPORT, GeoPoint.from_east(21.3, -158.07)),
    ]
    scenario = DemandScenario(
        percentile=50,
        levels={("Z0", AssetCategory.BOAT): 1, ("Z0", AssetCategory.HELICOPTER): 1},
        positions={"Z0": ZONE_POS},
        zone_classes={"Z0": AssetClass.BOAT_HELICOPTER},
    )
    instance = build_instance(assets, ports, scenario, 1.5, Scope.PACIFIC_REGION)
    assert instance.compat[0].tolist() == [True, False]
    assert instance.compat[1].tolist() == [False, True]


def test_deployment_time_is_distance_over_max_speed():
    instance = _one_boat_instance(scope=Scope.PACIFIC_REGION)
    d = haversine_nmi(HONOLULU, ZONE_POS) / 30.0
    current = [p.id for p in instance.homeports].index("harbor-a")
    assert instance.deploy_hours[0, current, 0] == pytest.approx(d, rel=1e-12)


def test_event_cap_is_hours_over_mission_time():
    instance = _one_boat_instance()
    assert instance.q_events[0] == int(120.0 // 1.5)


def test_unknown_current_homeport_rejected():
    assets = [Asset("B1", AssetCategory.BOAT, 20.0, 30.0, 120.0, "missing")]
    ports = [Homeport("harbor-a", HomeportKind.HARBOR, HONOLULU)]
    scenario = DemandScenario(50, {}, {"Z0": ZONE_POS}, {"Z0": AssetClass.BOAT_HELICOPTER})
    with pytest.raises(ValueError):
        build_instance(assets, ports, scenario, 1.5, Scope.CURRENT_ONLY)


def test_current_only_scope_restricts_ports():
    instance = _one_boat_instance(scope=Scope.CURRENT_ONLY)
    assert [p.id for p in instance.homeports] == ["harbor-a"]


# --------------------------------- solving ---------------------------------


def test_forced_single_assignment():
    instance = _one_boat_instance()
    solution = solve(instance, (0.4, 0.6))
    assert solution.status is SolveStatus.OPTIMAL
    assert solution.x == {"B1": "harbor-a"}
    assert solution.y == {("B1", "harbor-a", "Z0"): 1}
    assert solution.f1 == 0.0
    assert solution.f2 == pytest.approx(instance.deploy_hours[0, 0, 0], rel=1e-12)
    solution.verify(instance)


def test_zero_demand_keeps_everything_still():
    instance = _one_boat_instance(level=0, scope=Scope.PACIFIC_REGION)
    solution = solve(instance, (0.5, 0.5))
    assert solution.status is SolveStatus.OPTIMAL
    assert solution.f1 == 0.0
    assert solution.f2 == 0.0
    assert solution.y == {}


def test_infeasible_has_category_explanation():
    instance = _one_boat_instance(level=500)
    assert capacity_shortfalls(instance)
    solution = solve(instance, (0.5, 0.5))
    assert solution.status is SolveStatus.INFEASIBLE
    assert "boat" in solution.infeasible_reason


def test_demand_for_absent_category_is_infeasible():
    assets = [Asset("B1", AssetCategory.BOAT, 20.0, 30.0, 120.0, "harbor-a")]
    ports = [Homeport("harbor-a", HomeportKind.HARBOR, HONOLULU)]
    scenario = DemandScenario(
        50,
        {("Z0", AssetCategory.BOAT): 1, ("Z0", AssetCategory.HELICOPTER): 1},
        {"Z0": ZONE_POS},
        {"Z0": AssetClass.BOAT_HELICOPTER},
    )
    instance = build_instance(assets, ports, scenario, 1.5, Scope.CURRENT_ONLY)
    solution = solve(instance, (0.5, 0.5))
    assert solution.status is SolveStatus.INFEASIBLE
    assert "helicopter" in solution.infeasible_reason


def test_weight_validation():
    instance = _one_boat_instance()
    with pytest.raises(ValueError):
        solve(instance, (0.7, 0.7))
    with pytest.raises(ValueError):
        solve(instance, (-0.1, 1.1))


def test_matches_brute_force_on_random_instances():
    rng = np.random.default_rng(2718)
    feasible_seen = 0
    infeasible_seen = 0
    for trial in range(40):
        instance = random_small_instance(rng, allow_unservable=(trial % 5 == 0))
        weights = random_weights(rng)
        expected = brute_force_optimum(instance, weights)
        solution = solve(instance, weights)
        if expected is None:
            assert solution.status is SolveStatus.INFEASIBLE
            infeasible_seen += 1
            continue
        feasible_seen += 1
        assert solution.status is SolveStatus.OPTIMAL
        assert solution.weighted_objective == pytest.approx(expected[0], abs=1e-6)
        solution.verify(instance)
    assert feasible_seen >= 20


def test_q_loosening_preserves_optimum():
    rng = np.random.default_rng(31415)
    for _ in range(15):
        instance = random_small_instance(rng)
        weights = random_weights(rng)
        tight = solve(instance, weights)
        loose = solve(instance.with_q(100 * max(1, instance.n_zones)), weights)
        assert tight.status == loose.status
        if tight.status is SolveStatus.OPTIMAL:
            assert tight.weighted_objective == pytest.approx(loose.weighted_objective, abs=1e-6)


def test_scalarization_scale_invariance():
    rng = np.random.default_rng(99)
    for _ in range(5):
        instance = random_small_instance(rng)
        base = _solve_scalarized(instance, 0.4, 0.6)
        doubled = _solve_scalarized(instance, 0.8, 1.2)
        assert base.status == doubled.status
        if base.status is SolveStatus.OPTIMAL:
            assert (base.f1, base.f2) == (doubled.f1, doubled.f2)


def test_solution_json_shape():
    solution = solve(_one_boat_instance(), (0.4, 0.6))
    payload = solution.to_json()
    assert payload["x"] == {"B1": "harbor-a"}
    assert payload["y"] == [{"asset": "B1", "homeport": "harbor-a", "zone": "Z0", "events": 1}]
    assert "wall" not in str(sorted(payload["stats"]))
    assert set(payload["stats"]) == {"nodes", "lp_iterations"}


# ------------------------------ cross-evaluation ------------------------------


def test_cross_evaluate_self_matches_direct():
    rng = np.random.default_rng(777)
    checked = 0
    while checked < 10:
        instance = random_small_instance(rng)
        weights = random_weights(rng)
        direct = solve(instance, weights)
        if direct.status is not SolveStatus.OPTIMAL:
            continue
        cross = cross_evaluate(instance, instance, weights)
        assert cross.feasible
        assert cross.f2 == pytest.approx(direct.f2, abs=1e-9)
        checked += 1


def test_cross_evaluate_zero_demand_target():
    instance_a = _one_boat_instance(level=1, scope=Scope.PACIFIC_REGION)
    instance_b = _one_boat_instance(level=0, scope=Scope.PACIFIC_REGION)
    cross = cross_evaluate(instance_a, instance_b, (0.5, 0.5))
    assert cross.feasible
    assert cross.f2 == 0.0


def test_cross_evaluate_reports_infeasible_without_raising():
    instance_a = _one_boat_instance(level=1, scope=Scope.PACIFIC_REGION)
    instance_b = _one_boat_instance(level=500, scope=Scope.PACIFIC_REGION)
    cross = cross_evaluate(instance_a, instance_b, (0.5, 0.5))
    assert not cross.feasible
    assert cross.f2 is None


def test_cross_evaluate_requires_matching_sets():
    instance_a = _one_boat_instance(scope=Scope.PACIFIC_REGION)
    instance_b = _one_boat_instance(scope=Scope.CURRENT_ONLY)
    with pytest.raises(ValueError):
        cross_evaluate(instance_a, instance_b, (0.5, 0.5))
