import time

import numpy as np
import pytest

from sarloc.milp import default_weight_grid, pareto_sweep, write_front_csv
from sarloc.milp.pareto import DEFAULT_DELTA, InfeasibleModelError
from sarloc.milp.solver import SolveStatus, _solve_scalarized

from test_milp import _one_boat_instance


@pytest.fixture(scope="session")
def bundled_front(bundled_instance_p75):
    start = time.perf_counter()
    front = pareto_sweep(bundled_instance_p75)
    return front, time.perf_counter() - start


def test_default_grid_shape():
    grid = default_weight_grid()
    assert len(grid) == 6
    assert grid[0] == (DEFAULT_DELTA, 1.0 - DEFAULT_DELTA)
    assert grid[-1] == (1.0 - DEFAULT_DELTA, DEFAULT_DELTA)
    assert all(w1 + w2 == pytest.approx(1.0, abs=1e-12) for w1, w2 in grid)
    with pytest.raises(ValueError):
        default_weight_grid(0.0)


def test_single_weight_single_point():
    instance = _one_boat_instance()
    front = pareto_sweep(instance, [(0.4, 0.6)])
    assert len(front.sweep) == 1
    assert len(front.points) == 1
    assert not front.sweep[0].dominated


def test_current_posture_globally_optimal_collapses_front():
    # One boat already at the only sensible harbor: every weight lands on the
    # same (0, f2*) point.
    instance = _one_boat_instance()
    front = pareto_sweep(instance)
    assert len(front.points) == 1
    assert front.points[0].f1 == 0.0
    assert len(front.points[0].weights) == 6


def test_sweep_propagates_infeasibility():
    with pytest.raises(InfeasibleModelError):
        pareto_sweep(_one_boat_instance(level=500))


def test_bundled_front_monotone_and_nondominated(bundled_front):
    front, _ = bundled_front
    entries = sorted(front.sweep, key=lambda e: e.w1)
    for lo, hi in zip(entries, entries[1:]):
        assert hi.solution.f1 <= lo.solution.f1 + 1e-6
        assert hi.solution.f2 >= lo.solution.f2 - 1e-6
    for p in front.points:
        for q in front.points:
            if p is q:
                continue
            dominates = p.f1 <= q.f1 + 1e-9 and p.f2 <= q.f2 + 1e-9 and (
                p.f1 < q.f1 - 1e-9 or p.f2 < q.f2 - 1e-9
            )
            assert not dominates
    assert len(front.points) >= 2


def test_bundled_front_relocation_averse_endpoint(bundled_front, bundled_instance_p75):
    front, _ = bundled_front
    endpoint = max(front.sweep, key=lambda e: e.w1)
    assert endpoint.solution.f1 == 0.0
    # Its deployment time is the best achievable without moving anything.
    current_x = {a.id: a.current_homeport for a in bundled_instance_p75.assets}
    stay_put = _solve_scalarized(bundled_instance_p75, 0.0, 1.0, fixed_x=current_x)
    assert stay_put.status is SolveStatus.OPTIMAL
    assert endpoint.solution.f2 == pytest.approx(stay_put.f2, abs=1e-9)


def test_front_points_record_their_weights(bundled_front):
    front, _ = bundled_front
    swept = {(e.w1, e.w2) for e in front.sweep}
    recorded = {w for p in front.points for w in p.weights}
    assert recorded <= swept
    dominated = {(e.w1, e.w2) for e in front.sweep if e.dominated}
    assert recorded | dominated == swept


def test_front_csv_layout(tmp_path, bundled_front):
    front, _ = bundled_front
    path = tmp_path / "front.csv"
    write_front_csv(front, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "w1,w2,f1_relocation_hours,f2_deployment_hours,dominated"
    assert len(lines) == 1 + len(front.sweep)
    first = lines[1].split(",")
    assert float(first[0]) == pytest.approx(DEFAULT_DELTA)
    assert first[4] in {"0", "1"}
