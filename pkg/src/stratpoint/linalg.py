"""Small exact linear algebra over Fractions (dense lists of rows)."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Matrix = list[list[Fraction]]


def as_matrix(rows: Sequence[Sequence]) -> Matrix:
    return [[Fraction(v) for v in r] for r in rows]


def rref(rows: Sequence[Sequence], ncols: int | None = None) -> tuple[Matrix, list[int]]:
    """Reduced row echelon form and pivot columns."""
    M = as_matrix(rows)
    if not M:
        return M, []
    ncols = len(M[0]) if ncols is None else ncols
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(M)) if M[i][c] != 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = 1 / M[r][c]
        M[r] = [v * inv for v in M[r]]
        for i in range(len(M)):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
        if r == len(M):
            break
    return M, pivots


def rank(rows: Sequence[Sequence]) -> int:
    if not rows or not len(rows[0]):
        return 0
    return len(rref(rows)[1])


def independent_rows(rows: Sequence[Sequence]) -> list[int]:
    """Indices of a greedy maximal linearly independent subset of rows."""
    kept: list[int] = []
    basis: Matrix = []
    for i, r in enumerate(rows):
        trial = basis + [list(r)]
        if rank(trial) == len(trial):
            basis = as_matrix(trial)
            kept.append(i)
    return kept


def solve(A: Sequence[Sequence], b: Sequence) -> list[Fraction] | None:
    """Unique solution of ``A v = b`` or ``None`` (singular or inconsistent)."""
    if not A:
        return []
    ncols = len(A[0])
    aug = [list(r) + [bv] for r, bv in zip(A, b)]
    R, piv = rref(aug, ncols + 1)
    if ncols in piv or len(piv) < ncols:
        return None
    return [R[k][ncols] for k in range(ncols)]


def solve_consistent(A: Sequence[Sequence], b: Sequence, ncols: int) -> list[Fraction] | None:
    """Some solution of ``A v = b`` (free variables set to zero), ``None`` if inconsistent."""
    if not A:
        return [Fraction(0)] * ncols
    aug = [list(r) + [bv] for r, bv in zip(A, b)]
    R, piv = rref(aug, ncols + 1)
    if ncols in piv:
        return None
    v = [Fraction(0)] * ncols
    for k, c in enumerate(piv):
        v[c] = R[k][ncols]
    return v


def det(A: Sequence[Sequence]) -> Fraction:
    M = as_matrix(A)
    n = len(M)
    if any(len(r) != n for r in M):
        raise ValueError("determinant of a non-square matrix")
    sign = Fraction(1)
    out = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if M[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            M[c], M[piv] = M[piv], M[c]
            sign = -sign
        out *= M[c][c]
        for i in range(c + 1, n):
            if M[i][c] != 0:
                f = M[i][c] / M[c][c]
                M[i] = [a - f * bb for a, bb in zip(M[i], M[c])]
    return sign * out


def matvec(A: Sequence[Sequence], v: Sequence) -> list[Fraction]:
    return [sum((a * b for a, b in zip(r, v)), Fraction(0)) for r in A]


def dot(u: Sequence, v: Sequence) -> Fraction:
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def transpose(A: Sequence[Sequence]) -> Matrix:
    return [list(c) for c in zip(*A)]
