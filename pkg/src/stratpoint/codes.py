"""Combinatorial code of a jet point and the predicates built on it.

A pair ``(I, J)`` qualifies when some multipliers ``mu_i > 0`` (``i`` in ``I``)
and ``lambda_j != 0`` (``j`` in ``J``) cancel the corresponding gradients.
The code keeps the inclusion-minimal qualifying pairs.

Jet feasibility requires every ``alpha_i <= 0`` and every ``beta_j == 0``;
infeasible jets get the empty code.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Iterable

from . import linalg
from .core import CombinatorialCode, JetPoint, Pair, make_pair, to_rational
from .lp import OPTIMAL, LpProblem, lp_feasible, lp_solve

BRUTE_FORCE_MAX_CONSTRAINTS = 6
BRUTE_FORCE_MAX_N = 4


def jet_feasible(jet: JetPoint) -> bool:
    return all(a <= 0 for a in jet.alpha) and all(b == 0 for b in jet.beta)


def active_set(jet: JetPoint) -> frozenset:
    """Labels ``i`` with ``alpha_i == 0``.  Use :func:`jet_feasible` for the gate."""
    return frozenset(i + 1 for i, a in enumerate(jet.alpha) if a == 0)


def _index_universe(jet: JetPoint) -> list[int]:
    universe = sorted(active_set(jet))
    if jet.has_objective:
        universe.append(jet.m_star)
    return universe


def _check_indices(jet: JetPoint, I: Iterable[int], J: Iterable[int]):
    top = jet.m_star if jet.has_objective else jet.m_le
    for i in I:
        if not 1 <= i <= top:
            raise IndexError(f"inequality label {i} out of range 1..{top}")
    for j in J:
        if not 1 <= j <= jet.m_eq:
            raise IndexError(f"equality label {j} out of range 1..{jet.m_eq}")


def _columns(jet: JetPoint, I: list[int], J: list[int], signs: tuple[int, ...]):
    cols = [jet.gradient(i) for i in I]
    cols += [tuple(s * v for v in jet.b[j - 1]) for j, s in zip(J, signs)]
    return cols


def _strict_lp(jet: JetPoint, I: list[int], J: list[int], signs: tuple[int, ...]):
    """max t s.t. sum w_k col_k = 0, sum w = 1, w_k >= t; returns (t, w) or None."""
    cols = _columns(jet, I, J, signs)
    k = len(cols)
    eq_rows = [[c[r] for c in cols] + [0] for r in range(jet.n)]
    eq_rows.append([1] * k + [0])
    eq_rhs = [0] * jet.n + [1]
    ineq_rows = []
    for idx in range(k):
        row = [0] * (k + 1)
        row[idx] = -1
        row[k] = 1
        ineq_rows.append(row)
    res = lp_solve(LpProblem([0] * k + [1], eq_rows, eq_rhs, ineq_rows, [0] * k))
    if res.status != OPTIMAL:
        return None
    return res.value, res.solution[:k]


def qualifying_multipliers(jet: JetPoint, I: Iterable[int], J: Iterable[int] = ()):
    """Certificate ``(mu, lam)`` for the pair, or ``None`` if it does not qualify."""
    I, J = sorted(set(I)), sorted(set(J))
    _check_indices(jet, I, J)
    if not I and not J:
        raise ValueError("pair must be nonempty")
    if not jet_feasible(jet):
        return None
    allowed = set(_index_universe(jet))
    if any(i not in allowed for i in I):
        return None
    for signs in itertools.product((1, -1), repeat=len(J)):
        out = _strict_lp(jet, I, J, signs)
        if out is not None and out[0] > 0:
            w = out[1]
            mu = {i: w[k] for k, i in enumerate(I)}
            lam = {j: s * w[len(I) + k] for k, (j, s) in enumerate(zip(J, signs))}
            return mu, lam
    return None


def pair_qualifies(jet: JetPoint, I: Iterable[int], J: Iterable[int] = ()) -> bool:
    return qualifying_multipliers(jet, I, J) is not None


def _candidates(universe_i: list[int], universe_j: list[int]):
    pool = []
    for ki in range(len(universe_i) + 1):
        for I in itertools.combinations(universe_i, ki):
            for kj in range(len(universe_j) + 1):
                if ki + kj == 0:
                    continue
                for J in itertools.combinations(universe_j, kj):
                    pool.append((I, J))
    pool.sort(key=lambda pr: (len(pr[0]) + len(pr[1]), pr[0], pr[1]))
    return pool


def _covers(kept: list[Pair], I: frozenset, J: frozenset) -> bool:
    return any(kI <= I and kJ <= J for kI, kJ in kept)


def compute_code(jet: JetPoint) -> CombinatorialCode:
    """Ascending-cardinality enumeration with subset pruning (LP decisions)."""
    i0 = active_set(jet)
    if not jet_feasible(jet):
        return CombinatorialCode(i0, frozenset(), jet.m_star, feasible=False)
    kept: list[Pair] = []
    for I, J in _candidates(_index_universe(jet), list(range(1, jet.m_eq + 1))):
        fI, fJ = frozenset(I), frozenset(J)
        if _covers(kept, fI, fJ):
            continue
        if qualifying_multipliers(jet, I, J) is not None:
            kept.append((fI, fJ))
    return CombinatorialCode(i0, frozenset(kept), jet.m_star)


def is_stationary(jet: JetPoint) -> bool:
    return compute_code(jet).is_stationary


def mfcq_violated(jet: JetPoint) -> bool:
    return compute_code(jet).mfcq_violated


def in_closure(jet: JetPoint) -> bool:
    """Nonzero element of the multiplier cone, normalised to ``sum |.| = 1``."""
    if not jet_feasible(jet):
        return False
    I = _index_universe(jet)
    J = list(range(1, jet.m_eq + 1))
    if not I and not J:
        return False
    for signs in itertools.product((1, -1), repeat=len(J)):
        cols = _columns(jet, I, J, signs)
        eq_rows = [[c[r] for c in cols] for r in range(jet.n)] + [[1] * len(cols)]
        res = lp_feasible(eq_rows, [0] * jet.n + [1], var_count=len(cols))
        if res.feasible:
            return True
    return False


def perturb_toward_sp(jet: JetPoint, step, pair: Pair | None = None) -> JetPoint:
    """Shift the gradients of an MF pair against the objective gradient.

    Each ``a_i`` (``i`` in ``I``) becomes ``a_i - step * a_star`` and each
    ``b_j`` becomes ``b_j - step * sign(lambda_j) * a_star`` where ``lambda``
    is a certificate for the pair.  For a positive step the objective gradient
    then closes the relation with a positive multiplier.
    """
    step = to_rational(step)
    if not jet.has_objective:
        raise ValueError("perturbation needs an objective gradient")
    code = compute_code(jet)
    if code.is_stationary or not code.mfcq_violated:
        raise ValueError("jet must violate MFCQ without being stationary")
    if pair is None:
        from .core import sorted_pairs

        pair = sorted_pairs(code.mf_pairs)[0]
    if pair not in code.mf_pairs:
        raise ValueError("pair is not an MF pair of the jet's code")
    I, J = pair
    cert = qualifying_multipliers(jet, I, J)
    assert cert is not None
    _, lam = cert
    star = jet.a_star
    a = [list(v) for v in jet.a]
    b = [list(v) for v in jet.b]
    for i in I:
        a[i - 1] = [v - step * s for v, s in zip(a[i - 1], star)]
    for j in J:
        sign = 1 if lam[j] > 0 else -1
        b[j - 1] = [v - step * sign * s for v, s in zip(b[j - 1], star)]
    return JetPoint(a, jet.alpha, b, jet.beta, star, n=jet.n)


# ---------------------------------------------------------------------------
# independent oracle


def _vertex_supports(cols: list[tuple[Fraction, ...]], n: int) -> list[frozenset]:
    """Supports of the vertices of {w >= 0, sum w = 1, sum w_k col_k = 0}.

    Every vertex is a basic solution: its support indexes linearly independent
    columns of the stacked system, so at most ``n + 1`` of them.
    """
    k = len(cols)
    stacked = [list(c) + [Fraction(1)] for c in cols]
    rhs = [Fraction(0)] * n + [Fraction(1)]
    supports = set()
    for size in range(1, min(k, n + 1) + 1):
        for S in itertools.combinations(range(k), size):
            A = [[stacked[c][r] for c in S] for r in range(n + 1)]
            if linalg.rank(A) < size:
                continue
            w = linalg.solve_consistent(A, rhs, size)
            if w is None or any(v < 0 for v in w):
                continue
            # the solution is unique (full column rank); keep its exact support
            supports.add(frozenset(S[t] for t in range(size) if w[t] != 0))
    return list(supports)


def brute_force_code(jet: JetPoint) -> CombinatorialCode:
    """Same contract as :func:`compute_code`, decided without any simplex.

    For every global sign pattern on the equality multipliers, all vertices
    of the normalised multiplier polytope are enumerated.  A pair admits a
    strictly positive certificate exactly when the vertices supported inside
    it cover it (their barycentre is then strictly positive).  Minimality is
    applied afterwards over all qualifying pairs.
    """
    if jet.m_le + jet.m_eq > BRUTE_FORCE_MAX_CONSTRAINTS or jet.n > BRUTE_FORCE_MAX_N:
        raise ValueError("problem size too large for exhaustive enumeration")
    i0 = active_set(jet)
    if not jet_feasible(jet):
        return CombinatorialCode(i0, frozenset(), jet.m_star, feasible=False)
    I_all = _index_universe(jet)
    J_all = list(range(1, jet.m_eq + 1))
    labels = [("I", i) for i in I_all] + [("J", j) for j in J_all]
    vertex_sets = []
    for signs in itertools.product((1, -1), repeat=len(J_all)):
        cols = _columns(jet, I_all, J_all, signs)
        vertex_sets.append(_vertex_supports(cols, jet.n))

    qualifying = []
    for mask in range(1, 1 << len(labels)):
        members = frozenset(t for t in range(len(labels)) if mask >> t & 1)
        for supports in vertex_sets:
            inside = [s for s in supports if s <= members]
            if inside and frozenset().union(*inside) == members:
                qualifying.append(members)
                break
    minimal = [m for m in qualifying if not any(o < m for o in qualifying)]
    pairs = frozenset(
        make_pair(
            (labels[t][1] for t in m if labels[t][0] == "I"),
            (labels[t][1] for t in m if labels[t][0] == "J"),
        )
        for m in minimal
    )
    return CombinatorialCode(i0, pairs, jet.m_star)
