"""Exact two-phase simplex with Bland's rule.

Problems are stated as ``maximize objective . v`` subject to ``eq_rows v =
eq_rhs`` and ``ineq_rows v <= ineq_rhs``.  Variables are non-negative unless
listed in ``free``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .core import to_rational, to_vector

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpProblem:
    objective: tuple
    eq_rows: tuple = ()
    eq_rhs: tuple = ()
    ineq_rows: tuple = ()
    ineq_rhs: tuple = ()
    free: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "objective", to_vector(self.objective))
        object.__setattr__(self, "eq_rows", tuple(to_vector(r) for r in self.eq_rows))
        object.__setattr__(self, "ineq_rows", tuple(to_vector(r) for r in self.ineq_rows))
        object.__setattr__(self, "eq_rhs", to_vector(self.eq_rhs))
        object.__setattr__(self, "ineq_rhs", to_vector(self.ineq_rhs))
        object.__setattr__(self, "free", frozenset(self.free))
        nv = self.var_count
        for r in self.eq_rows + self.ineq_rows:
            if len(r) != nv:
                raise ValueError(f"row of width {len(r)} in a problem with {nv} variables")
        if len(self.eq_rhs) != len(self.eq_rows) or len(self.ineq_rhs) != len(self.ineq_rows):
            raise ValueError("row/rhs count mismatch")
        if any(not 0 <= k < nv for k in self.free):
            raise ValueError("free variable index out of range")

    @property
    def var_count(self) -> int:
        return len(self.objective)


@dataclass(frozen=True)
class LpResult:
    status: str
    solution: tuple | None = None
    value: Fraction | None = None

    @property
    def feasible(self) -> bool:
        return self.status != INFEASIBLE


class _Tableau:
    """Dense tableau; row ``r`` reads ``sum_k T[r][k] v_k = T[r][-1]``."""

    def __init__(self, rows: list[list[Fraction]], basis: list[int]):
        self.T = rows
        self.basis = basis

    def pivot(self, r: int, c: int):
        T = self.T
        inv = 1 / T[r][c]
        T[r] = [v * inv for v in T[r]]
        pr = T[r]
        for i, row in enumerate(T):
            if i != r and row[c] != 0:
                f = row[c]
                T[i] = [a - f * b for a, b in zip(row, pr)]
        self.basis[r] = c

    def reduced_costs(self, cost: Sequence[Fraction], ncols: int) -> list[Fraction]:
        # minimisation: d_k = c_k - c_B . column_k
        d = list(cost[:ncols])
        for r, bv in enumerate(self.basis):
            cb = cost[bv]
            if cb:
                row = self.T[r]
                for k in range(ncols):
                    if row[k]:
                        d[k] -= cb * row[k]
        return d

    def run(self, cost: Sequence[Fraction], allowed: int, max_iter: int = 100000) -> str:
        """Minimise ``cost`` over columns ``< allowed`` with Bland's rule."""
        for _ in range(max_iter):
            d = self.reduced_costs(cost, allowed)
            enter = next((k for k in range(allowed) if d[k] < 0), None)
            if enter is None:
                return OPTIMAL
            best = None
            for r, row in enumerate(self.T):
                a = row[enter]
                if a > 0:
                    ratio = row[-1] / a
                    key = (ratio, self.basis[r])
                    if best is None or key < best[0]:
                        best = (key, r)
            if best is None:
                return UNBOUNDED
            self.pivot(best[1], enter)
        raise RuntimeError("simplex iteration limit reached")


def lp_solve(lp: LpProblem) -> LpResult:
    nv = lp.var_count
    # split free variables v = v+ - v-
    cols: list[tuple[int, int]] = []  # (original var, sign)
    for k in range(nv):
        cols.append((k, 1))
        if k in lp.free:
            cols.append((k, -1))
    nx = len(cols)

    def expand(row):
        return [row[k] * s for k, s in cols]

    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    slack_of: list[int | None] = []
    for r, b in zip(lp.eq_rows, lp.eq_rhs):
        rows.append(expand(r))
        rhs.append(b)
        slack_of.append(None)
    n_ineq = len(lp.ineq_rows)
    for s, (r, b) in enumerate(zip(lp.ineq_rows, lp.ineq_rhs)):
        rows.append(expand(r))
        rhs.append(b)
        slack_of.append(s)
    m = len(rows)
    ns = n_ineq
    ncols = nx + ns + m  # structural, slack, artificial
    T: list[list[Fraction]] = []
    for r in range(m):
        line = rows[r] + [Fraction(0)] * (ns + m) + [rhs[r]]
        if slack_of[r] is not None:
            line[nx + slack_of[r]] = Fraction(1)
        if line[-1] < 0:
            line = [-v for v in line]
        line[nx + ns + r] = Fraction(1)
        T.append(line)
    tab = _Tableau(T, [nx + ns + r for r in range(m)])

    art0 = nx + ns
    phase1 = [Fraction(0)] * art0 + [Fraction(1)] * m
    status = tab.run(phase1, ncols)
    assert status == OPTIMAL
    infeas = sum((tab.T[r][-1] for r, bv in enumerate(tab.basis) if bv >= art0), Fraction(0))
    if infeas > 0:
        return LpResult(INFEASIBLE)

    # drive zero-level artificials out of the basis, dropping redundant rows
    r = 0
    while r < len(tab.T):
        if tab.basis[r] >= art0:
            c = next((k for k in range(art0) if tab.T[r][k] != 0), None)
            if c is None:
                del tab.T[r]
                del tab.basis[r]
                continue
            tab.pivot(r, c)
        r += 1
    tab.T = [row[:art0] + [row[-1]] for row in tab.T]

    cost = [-lp.objective[k] * s for k, s in cols] + [Fraction(0)] * ns
    status = tab.run(cost, art0)
    if status == UNBOUNDED:
        return LpResult(UNBOUNDED)
    ext = [Fraction(0)] * art0
    for r, bv in enumerate(tab.basis):
        ext[bv] = tab.T[r][-1]
    v = [Fraction(0)] * nv
    for idx, (k, s) in enumerate(cols):
        v[k] += s * ext[idx]
    value = sum((c * x for c, x in zip(lp.objective, v)), Fraction(0))
    return LpResult(OPTIMAL, tuple(v), value)


def lp_feasible(eq_rows=(), eq_rhs=(), ineq_rows=(), ineq_rhs=(), *,
                var_count: int | None = None, free=()) -> LpResult:
    """Phase-1 only: a feasible point or ``infeasible``."""
    if var_count is None:
        widths = {len(r) for r in tuple(eq_rows) + tuple(ineq_rows)}
        if len(widths) != 1:
            raise ValueError("cannot infer var_count")
        var_count = widths.pop()
    if free == "all":
        free = range(var_count)
    lp = LpProblem((0,) * var_count, tuple(eq_rows), tuple(eq_rhs),
                   tuple(ineq_rows), tuple(ineq_rhs), frozenset(free))
    res = lp_solve(lp)
    if res.status == INFEASIBLE:
        return res
    return LpResult(OPTIMAL, res.solution, Fraction(0))


def check_solution(lp: LpProblem, v: Sequence) -> bool:
    """Exact constraint check used to certify solver output."""
    v = [to_rational(x) for x in v]
    for k, x in enumerate(v):
        if k not in lp.free and x < 0:
            return False
    for r, b in zip(lp.eq_rows, lp.eq_rhs):
        if sum((a * x for a, x in zip(r, v)), Fraction(0)) != b:
            return False
    for r, b in zip(lp.ineq_rows, lp.ineq_rhs):
        if sum((a * x for a, x in zip(r, v)), Fraction(0)) > b:
            return False
    return True
