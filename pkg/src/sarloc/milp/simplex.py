"""Dense two-phase primal simplex over numpy tableaus.

Standard form: minimize c.x subject to a_ub.x <= b_ub, a_eq.x = b_eq, x >= 0.
Pivoting is Dantzig's rule with lowest-index tie-breaks, switching to Bland's
rule once degenerate pivots pile up, so the path is deterministic and cycling
cannot persist.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

FEAS_TOL = 1e-7  # phase-1 objective above this means infeasible
OPT_TOL = 1e-9  # reduced costs less negative than this count as optimal
PIVOT_TOL = 1e-9  # entries smaller than this cannot be pivot elements
DEGENERATE_RHS = 1e-10  # leaving rows with rhs below this are degenerate steps


class LPStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LinearProgram:
    """min c.x  s.t.  a_ub.x <= b_ub,  a_eq.x = b_eq,  x >= 0."""

    c: np.ndarray
    a_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None

    def blocks(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        n = len(self.c)
        a_ub = np.zeros((0, n)) if self.a_ub is None else np.atleast_2d(np.asarray(self.a_ub, float))
        b_ub = np.zeros(0) if self.b_ub is None else np.atleast_1d(np.asarray(self.b_ub, float))
        a_eq = np.zeros((0, n)) if self.a_eq is None else np.atleast_2d(np.asarray(self.a_eq, float))
        b_eq = np.zeros(0) if self.b_eq is None else np.atleast_1d(np.asarray(self.b_eq, float))
        if a_ub.shape != (len(b_ub), n) or a_eq.shape != (len(b_eq), n):
            raise ValueError("constraint blocks do not match the variable count")
        return np.asarray(self.c, float), a_ub, b_ub, a_eq, b_eq


@dataclass
class LPResult:
    status: LPStatus
    x: np.ndarray | None = None
    objective: float | None = None
    iterations: int = 0


@dataclass
class _Tableau:
    tab: np.ndarray  # (m + 1, n_total + 1); last row = reduced costs
    basis: np.ndarray  # (m,) basic variable per row
    iterations: int = 0
    degenerate: int = 0
    bland: bool = False
    _buf: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._buf = np.empty_like(self.tab)

    @property
    def m(self) -> int:
        return len(self.basis)

    def pivot(self, row: int, col: int) -> None:
        tab = self.tab
        tab[row] /= tab[row, col]
        col_vals = tab[:, col].copy()
        col_vals[row] = 0.0
        np.multiply(col_vals[:, None], tab[row][None, :], out=self._buf)
        np.subtract(tab, self._buf, out=tab)
        tab[:, col] = 0.0
        tab[row, col] = 1.0
        self.basis[row] = col
        self.iterations += 1


def _run_simplex(t: _Tableau, max_iter: int) -> LPStatus:
    bland_after = 10 * (t.m + t.tab.shape[1] - 1)
    while True:
        cost = t.tab[-1, :-1]
        if t.bland:
            negative = np.flatnonzero(cost < -OPT_TOL)
            if len(negative) == 0:
                return LPStatus.OPTIMAL
            col = int(negative[0])
        else:
            col = int(np.argmin(cost))
            if cost[col] >= -OPT_TOL:
                return LPStatus.OPTIMAL

        column = t.tab[:-1, col]
        rhs = t.tab[:-1, -1]
        eligible = np.flatnonzero(column > PIVOT_TOL)
        if len(eligible) == 0:
            return LPStatus.UNBOUNDED
        ratios = rhs[eligible] / column[eligible]
        best = ratios.min()
        ties = eligible[ratios <= best + 1e-9]
        row = int(ties[np.argmin(t.basis[ties])])  # lowest basic index on ties

        if rhs[row] <= DEGENERATE_RHS:
            t.degenerate += 1
            if t.degenerate > bland_after:
                t.bland = True
        t.pivot(row, col)
        if t.iterations > max_iter:
            raise ArithmeticError(f"simplex exceeded {max_iter} pivots")


def _rebuild_cost_row(t: _Tableau, c_full: np.ndarray) -> None:
    """Reset the reduced-cost row from scratch for the given objective."""
    m = t.m
    t.tab[-1, :-1] = c_full
    t.tab[-1, -1] = 0.0
    cb = c_full[t.basis]
    t.tab[-1, :] -= cb @ t.tab[:m, :]


def lp_solve(lp: LinearProgram, max_iter: int = 200_000) -> LPResult:
    """Two-phase primal simplex; distinguishes infeasible from unbounded."""
    c, a_ub, b_ub, a_eq, b_eq = lp.blocks()
    n = len(c)
    m_ub, m_eq = len(b_ub), len(b_eq)
    m = m_ub + m_eq

    if m == 0:
        # No constraints: with x >= 0 the optimum is at the origin unless some
        # cost is negative, in which case the problem is unbounded.
        if np.any(c < -OPT_TOL):
            return LPResult(LPStatus.UNBOUNDED)
        return LPResult(LPStatus.OPTIMAL, np.zeros(n), 0.0, 0)

    rows = np.hstack([np.vstack([a_ub, a_eq]), np.zeros((m, m_ub))])
    rows[:m_ub, n : n + m_ub] = np.eye(m_ub)
    rhs = np.concatenate([b_ub, b_eq])

    flipped = rhs < 0.0
    rows[flipped] *= -1.0
    rhs = np.abs(rhs)

    needs_artificial = np.ones(m, dtype=bool)
    needs_artificial[:m_ub] = flipped[:m_ub]  # clean <= rows start on their slack
    art_rows = np.flatnonzero(needs_artificial)
    n_art = len(art_rows)
    n_total = n + m_ub + n_art

    tab = np.zeros((m + 1, n_total + 1))
    tab[:m, : n + m_ub] = rows
    tab[:m, -1] = rhs
    basis = np.zeros(m, dtype=np.int64)
    for k, r in enumerate(art_rows):
        tab[r, n + m_ub + k] = 1.0
        basis[r] = n + m_ub + k
    for r in np.flatnonzero(~needs_artificial):
        basis[r] = n + r  # the row's own slack

    t = _Tableau(tab, basis)

    if n_art > 0:
        phase1_cost = np.zeros(n_total)
        phase1_cost[n + m_ub :] = 1.0
        _rebuild_cost_row(t, phase1_cost)
        status = _run_simplex(t, max_iter)
        if status is LPStatus.UNBOUNDED:  # cannot happen: phase 1 is bounded below
            raise ArithmeticError("phase 1 reported unbounded")
        phase1_obj = float(phase1_cost[t.basis] @ t.tab[:m, -1])
        if phase1_obj > FEAS_TOL:
            return LPResult(LPStatus.INFEASIBLE, iterations=t.iterations)

        # Pivot leftover artificial variables out of the basis; rows that
        # cannot leave are redundant and get dropped.
        art_start = n + m_ub
        drop: list[int] = []
        for r in range(t.m):
            if t.basis[r] < art_start:
                continue
            candidates = np.flatnonzero(np.abs(t.tab[r, :art_start]) > 1e-9)
            if len(candidates) == 0:
                drop.append(r)
            else:
                t.pivot(r, int(candidates[0]))
        if drop:
            keep = np.setdiff1d(np.arange(t.m), drop)
            t.tab = np.vstack([t.tab[keep], t.tab[-1:]])
            t.basis = t.basis[keep]
            t._buf = np.empty_like(t.tab)
        # Drop artificial columns entirely.
        t.tab = np.hstack([t.tab[:, :art_start], t.tab[:, -1:]])
        t._buf = np.empty_like(t.tab)

    c_full = np.concatenate([c, np.zeros(m_ub)])
    _rebuild_cost_row(t, c_full)
    status = _run_simplex(t, max_iter)
    if status is LPStatus.UNBOUNDED:
        return LPResult(LPStatus.UNBOUNDED, iterations=t.iterations)

    x_full = np.zeros(n + m_ub)
    x_full[t.basis] = t.tab[: t.m, -1]
    x = np.maximum(x_full[:n], 0.0)
    return LPResult(LPStatus.OPTIMAL, x, float(c @ x), t.iterations)
