import numpy as np
import pytest

from sarloc.milp.simplex import LinearProgram, LPStatus, lp_solve

from oracles import random_bounded_lp, vertex_enumeration_optimum


def test_single_equality():
    lp = LinearProgram(c=np.array([0.0]), a_eq=np.array([[1.0]]), b_eq=np.array([1.0]))
    result = lp_solve(lp)
    assert result.status is LPStatus.OPTIMAL
    assert result.objective == pytest.approx(0.0, abs=1e-9)
    assert result.x[0] == pytest.approx(1.0, abs=1e-9)


def test_covering_pair():
    lp = LinearProgram(
        c=np.array([1.0, 1.0]),
        a_ub=np.array([[-1.0, -1.0]]),
        b_ub=np.array([-2.0]),
    )
    result = lp_solve(lp)
    assert result.status is LPStatus.OPTIMAL
    assert result.objective == pytest.approx(2.0, abs=1e-9)


def test_infeasible_detected():
    lp = LinearProgram(
        c=np.array([1.0]),
        a_ub=np.array([[1.0]]),
        b_ub=np.array([-1.0]),
    )
    assert lp_solve(lp).status is LPStatus.INFEASIBLE


def test_unbounded_detected():
    lp = LinearProgram(c=np.array([-1.0, 0.0]), a_ub=np.array([[0.0, 1.0]]), b_ub=np.array([5.0]))
    assert lp_solve(lp).status is LPStatus.UNBOUNDED


def test_degenerate_lp_terminates():
    # Klee-Minty-flavoured cube with a degenerate twist; Dantzig alone could
    # wander, the Bland switch keeps it finite.
    n = 6
    a_ub = np.zeros((n, n))
    b_ub = np.zeros(n)
    for i in range(n):
        a_ub[i, i] = 1.0
        for j in range(i):
            a_ub[i, j] = 2.0 ** (i - j + 1)
        b_ub[i] = 5.0 ** (i + 1)
    c = -np.array([2.0 ** (n - 1 - j) for j in range(n)])
    result = lp_solve(LinearProgram(c=c, a_ub=a_ub, b_ub=b_ub))
    assert result.status is LPStatus.OPTIMAL
    assert result.objective == pytest.approx(-(5.0 ** n), rel=1e-9)


def test_equalities_with_redundant_rows():
    a_eq = np.array([[1.0, 1.0], [2.0, 2.0]])
    b_eq = np.array([3.0, 6.0])
    lp = LinearProgram(c=np.array([1.0, 2.0]), a_eq=a_eq, b_eq=b_eq)
    result = lp_solve(lp)
    assert result.status is LPStatus.OPTIMAL
    assert result.objective == pytest.approx(3.0, abs=1e-8)


def test_matches_vertex_enumeration_on_random_lps():
    rng = np.random.default_rng(7)
    checked = 0
    while checked < 25:
        lp = random_bounded_lp(rng)
        oracle = vertex_enumeration_optimum(lp)
        if oracle is None:
            continue
        result = lp_solve(lp)
        assert result.status is LPStatus.OPTIMAL
        assert result.objective == pytest.approx(oracle, abs=1e-6, rel=1e-6)
        checked += 1
