"""Exact projection QP: minimise ``||x - c||^2`` over a polyhedron.

Constraints are ``a_i . x + alpha_i <= 0`` and ``b_j . x + beta_j = 0``.
Multipliers refer to the unscaled objective, so the KKT residual is
``2 (x - c) + sum mu_i a_i + sum lambda_j b_j``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import linalg
from .codes import compute_code
from .core import CombinatorialCode, Multipliers, to_vector
from .jets import SqpInstance, param_index
from .lp import lp_feasible

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"


class QpIterationError(RuntimeError):
    """Active-set loop exceeded its safety cap (indicates a bug)."""


@dataclass(frozen=True)
class QpSolution:
    status: str
    x_star: tuple | None = None
    active: frozenset = field(default_factory=frozenset)
    multipliers: Multipliers | None = None

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _prepare(c, A, alpha, B, beta):
    c = to_vector(c)
    A = [to_vector(r) for r in A]
    B = [to_vector(r) for r in B]
    alpha, beta = to_vector(alpha), to_vector(beta)
    n = len(c)
    if any(len(r) != n for r in A + B) or len(A) != len(alpha) or len(B) != len(beta):
        raise ValueError("constraint data do not match the center's dimension")
    return c, A, alpha, B, beta


def _project(c, N, r):
    """Projection of ``c`` onto ``{N x = r}`` (``N`` full row rank) and its multipliers."""
    if not N:
        return list(c), []
    NNt = [[linalg.dot(u, v) for v in N] for u in N]
    rhs = [2 * (linalg.dot(u, c) - ri) for u, ri in zip(N, r)]
    nu = linalg.solve(NNt, rhs)
    if nu is None:
        raise ValueError("working set is linearly dependent")
    x = [ci - sum((nk * u[k] for nk, u in zip(nu, N)), Fraction(0)) / 2 for k, ci in enumerate(c)]
    return x, nu


def _feasible_point(A, alpha, B, beta, n):
    res = lp_feasible(B, [-v for v in beta], A, [-v for v in alpha], var_count=n, free="all")
    return None if not res.feasible else list(res.solution)


def _reduce_equalities(B):
    # the system is known to be consistent, so a row basis of B suffices
    return linalg.independent_rows(B) if B else []


def solve_qp(c: Sequence, A: Sequence[Sequence] = (), alpha: Sequence = (),
             B: Sequence[Sequence] = (), beta: Sequence = ()) -> QpSolution:
    """Primal active-set method over exact rationals."""
    c, A, alpha, B, beta = _prepare(c, A, alpha, B, beta)
    n = len(c)
    x = _feasible_point(A, alpha, B, beta, n)
    if x is None:
        return QpSolution(INFEASIBLE)
    eq_keep = _reduce_equalities(B)
    eq_rows = [B[k] for k in eq_keep]
    eq_rhs = [-beta[k] for k in eq_keep]

    def independent_of(rows, v):
        return linalg.rank(rows + [v]) == len(rows) + 1

    W: list[int] = []
    for i in range(len(A)):
        if linalg.dot(A[i], x) + alpha[i] == 0 and independent_of(eq_rows + [A[k] for k in W], A[i]):
            W.append(i)

    cap = 2 ** (len(A) + 1) + 16
    for _ in range(cap):
        N = eq_rows + [A[k] for k in W]
        r = eq_rhs + [-alpha[k] for k in W]
        target, nu = _project(c, N, r)
        p = [t - xi for t, xi in zip(target, x)]
        if any(p):
            step, block = Fraction(1), None
            for i in range(len(A)):
                if i in W:
                    continue
                ap = linalg.dot(A[i], p)
                if ap > 0:
                    t = (-alpha[i] - linalg.dot(A[i], x)) / ap
                    if t < step:
                        step, block = t, i
            x = [xi + step * pi for xi, pi in zip(x, p)]
            if block is not None:
                W.append(block)
            continue
        mu_w = nu[len(eq_rows):]
        negative = [(W[k], v) for k, v in enumerate(mu_w) if v < 0]
        if not negative:
            mu = {i + 1: Fraction(0) for i in range(len(A)) if linalg.dot(A[i], x) + alpha[i] == 0}
            for k, i in enumerate(W):
                mu[i + 1] = mu_w[k]
            lam = {j + 1: Fraction(0) for j in range(len(B))}
            for k, j in enumerate(eq_keep):
                lam[j + 1] = nu[k]
            active = frozenset(i + 1 for i in range(len(A)) if linalg.dot(A[i], x) + alpha[i] == 0)
            return QpSolution(OPTIMAL, tuple(x), active, Multipliers(mu, lam))
        drop = min(negative)[0]
        W.remove(drop)
    raise QpIterationError("active-set iteration cap exceeded")


def kkt_residual(c, A, B, sol: QpSolution) -> list[Fraction]:
    x = sol.x_star
    res = [2 * (xi - ci) for xi, ci in zip(x, to_vector(c))]
    for i, a in enumerate(A):
        m = sol.multipliers.mu.get(i + 1, Fraction(0))
        res = [v + m * ak for v, ak in zip(res, to_vector(a))]
    for j, b in enumerate(B):
        lm = sol.multipliers.lam.get(j + 1, Fraction(0))
        res = [v + lm * bk for v, bk in zip(res, to_vector(b))]
    return res


def enumerate_qp(c: Sequence, A: Sequence[Sequence] = (), alpha: Sequence = (),
                 B: Sequence[Sequence] = (), beta: Sequence = ()) -> QpSolution:
    """Reference solver: try every active subset, keep the KKT point.

    Used as an oracle for :func:`solve_qp`; exponential in ``len(A)``.
    """
    c, A, alpha, B, beta = _prepare(c, A, alpha, B, beta)
    n = len(c)
    eq_all = [list(r) for r in B]
    if B:
        consistent = linalg.solve_consistent(eq_all, [-v for v in beta], n)
        if consistent is None:
            return QpSolution(INFEASIBLE)
    eq_keep = [k for k in linalg.independent_rows(eq_all)] if B else []
    for size in range(len(A) + 1):
        for S in itertools.combinations(range(len(A)), size):
            N = [B[k] for k in eq_keep] + [A[i] for i in S]
            if N and linalg.rank(N) < len(N):
                continue
            r = [-beta[k] for k in eq_keep] + [-alpha[i] for i in S]
            x, nu = _project(c, N, r)
            if any(linalg.dot(b, x) + be != 0 for b, be in zip(B, beta)):
                continue
            if any(linalg.dot(a, x) + al > 0 for a, al in zip(A, alpha)):
                continue
            mu_s = nu[len(eq_keep):]
            if any(v < 0 for v in mu_s):
                continue
            mu = {i + 1: Fraction(0) for i in range(len(A)) if linalg.dot(A[i], x) + alpha[i] == 0}
            for k, i in enumerate(S):
                mu[i + 1] = mu_s[k]
            lam = {j + 1: Fraction(0) for j in range(len(B))}
            for k, j in enumerate(eq_keep):
                lam[j + 1] = nu[k]
            active = frozenset(i + 1 for i in range(len(A)) if linalg.dot(A[i], x) + alpha[i] == 0)
            return QpSolution(OPTIMAL, tuple(x), active, Multipliers(mu, lam))
    return QpSolution(INFEASIBLE)


# ---------------------------------------------------------------------------
# special quadratic problems


@dataclass(frozen=True)
class StationaryPoint:
    status: str
    x: tuple | None
    code: CombinatorialCode | None


def _solve_sqp(sqp: SqpInstance, y, drop: int | None = None) -> QpSolution:
    data = sqp.constraints(y)
    A, alpha = list(data.A), list(data.alpha)
    if drop is not None:
        del A[drop - 1]
        del alpha[drop - 1]
    sol = solve_qp(sqp.c, A, alpha, data.B, data.beta)
    if drop is None or not sol.optimal:
        return sol

    def relabel(i):
        return i + 1 if i >= drop else i

    mu = {relabel(i): v for i, v in sol.multipliers.mu.items()}
    return QpSolution(sol.status, sol.x_star, frozenset(relabel(i) for i in sol.active),
                      Multipliers(mu, sol.multipliers.lam))


def stationary_map(sqp: SqpInstance, y: Sequence) -> StationaryPoint:
    """Unique stationary point of the instance at ``y`` with its exact code."""
    sol = _solve_sqp(sqp, y)
    if not sol.optimal:
        return StationaryPoint(INFEASIBLE, None, None)
    return StationaryPoint(OPTIMAL, sol.x_star, compute_code(sqp.jet(sol.x_star, y)))


def solve_deleted(sqp: SqpInstance, y: Sequence, m: int) -> QpSolution:
    """Minimiser with inequality ``m`` removed; labels keep their original numbering."""
    if not 1 <= m <= sqp.size.m_le:
        raise IndexError(f"inequality label {m} out of range")
    return _solve_sqp(sqp, y, drop=m)


class InfeasibleSubproblem(ValueError):
    pass


def full_parameters(sqp: SqpInstance, y_prime: Sequence, m: int, alpha_m) -> tuple:
    """Insert ``alpha_m`` into the canonical parameter vector ``y'``."""
    if not sqp.canonical:
        raise ValueError("alpha_m is a coordinate only of canonical instances")
    pos = param_index(sqp.size, "alpha", m)
    y_prime = list(to_vector(y_prime))
    if len(y_prime) != sqp.p - 1:
        raise ValueError(f"expected {sqp.p - 1} parameters without alpha_{m}")
    return tuple(y_prime[:pos] + [Fraction(alpha_m)] + y_prime[pos:])


def alpha_boundary(sqp: SqpInstance, y_prime: Sequence, m: int) -> Fraction:
    """The value of ``alpha_m`` that makes ``m`` exactly active at the deleted minimiser."""
    y = full_parameters(sqp, y_prime, m, 0)
    sol = solve_deleted(sqp, y, m)
    if not sol.optimal:
        raise InfeasibleSubproblem("problem without constraint m is infeasible")
    a_m = sqp.constraints(y).A[m - 1]
    return -linalg.dot(sol.x_star, a_m)
