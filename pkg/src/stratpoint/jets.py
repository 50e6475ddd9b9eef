"""Reduced jet extensions, point codes and the universal quadratic normal form.

Canonical parameter layout for a special quadratic problem of size
``(n, m_le, m_eq)``: ``(a_1, alpha_1, ..., a_m, alpha_m, b_1, beta_1, ...)``
with every gradient block of length ``n``; the same order as a flattened
:class:`JetPoint` without the objective gradient.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import linalg
from .codes import compute_code
from .core import (
    CombinatorialCode,
    JetPoint,
    Poly,
    PolyProblem,
    ProblemSize,
    eval_poly,
    grad_x,
    to_vector,
)


def _check_point(prob: PolyProblem, x, y):
    if len(x) != prob.size.n or len(y) != prob.size.p:
        raise ValueError(
            f"point has dimensions ({len(x)}, {len(y)}), problem is (n={prob.size.n}, p={prob.size.p})"
        )


def _grad(q: Poly, x, y) -> tuple[Fraction, ...]:
    return tuple(eval_poly(d, x, y) for d in grad_x(q))


def jet_sp(prob: PolyProblem, x: Sequence, y: Sequence = ()) -> JetPoint:
    """Values and x-gradients of all problem functions at ``(x, y)``."""
    _check_point(prob, x, y)
    x, y = to_vector(x), to_vector(y)
    return JetPoint(
        [_grad(g, x, y) for g in prob.g],
        [eval_poly(g, x, y) for g in prob.g],
        [_grad(h, x, y) for h in prob.h],
        [eval_poly(h, x, y) for h in prob.h],
        _grad(prob.f, x, y),
        n=prob.size.n,
    )


def jet_mf(prob: PolyProblem, x: Sequence, y: Sequence = ()) -> JetPoint:
    """:func:`jet_sp` with the objective gradient deleted."""
    _check_point(prob, x, y)
    x, y = to_vector(x), to_vector(y)
    return JetPoint(
        [_grad(g, x, y) for g in prob.g],
        [eval_poly(g, x, y) for g in prob.g],
        [_grad(h, x, y) for h in prob.h],
        [eval_poly(h, x, y) for h in prob.h],
        None,
        n=prob.size.n,
    )


@dataclass(frozen=True)
class PointCode:
    code: CombinatorialCode
    feasible: bool
    jet: JetPoint

    @property
    def stationary(self) -> bool:
        return self.feasible and self.code.is_stationary

    @property
    def mfcq_violated(self) -> bool:
        return self.feasible and self.code.mfcq_violated


def point_code(prob: PolyProblem, x: Sequence, y: Sequence = ()) -> PointCode:
    jet = jet_sp(prob, x, y)
    feasible = all(v <= 0 for v in jet.alpha) and all(v == 0 for v in jet.beta)
    return PointCode(compute_code(jet), feasible, jet)


# ---------------------------------------------------------------------------
# special quadratic problems


def param_index(size: ProblemSize, kind: str, k: int, coord: int | None = None) -> int:
    """0-based position of a coefficient in the canonical parameter vector.

    ``kind`` is one of ``a``, ``alpha``, ``b``, ``beta``; ``k`` is the 1-based
    constraint label and ``coord`` the 0-based gradient coordinate.
    """
    n = size.n
    if kind in ("a", "alpha"):
        if not 1 <= k <= size.m_le:
            raise IndexError(f"inequality label {k} out of range")
        base = (k - 1) * (n + 1)
    elif kind in ("b", "beta"):
        if not 1 <= k <= size.m_eq:
            raise IndexError(f"equality label {k} out of range")
        base = size.m_le * (n + 1) + (k - 1) * (n + 1)
    else:
        raise ValueError(kind)
    if kind in ("alpha", "beta"):
        return base + n
    if coord is None or not 0 <= coord < n:
        raise IndexError("gradient coordinate required")
    return base + coord


@dataclass(frozen=True)
class ConstraintData:
    A: tuple  # inequality gradients a_i
    alpha: tuple
    B: tuple
    beta: tuple


class SqpInstance:
    """Objective ``1/2 ||x - c||^2`` with affine constraints driven by ``y``.

    Canonical instances read their constraint coefficients directly from the
    parameter vector (``p = jet_dim - n``).  Affine-restricted instances map a
    lower-dimensional ``y`` to the canonical vector ``base + directions @ y``.
    """

    def __init__(self, size: ProblemSize, c: Sequence, base: Sequence | None = None,
                 directions: Sequence[Sequence] | None = None):
        self.c = to_vector(c)
        p_full = size.mf_jet_dim
        if len(self.c) != size.n:
            raise ValueError("center has wrong dimension")
        if (base is None) != (directions is None):
            raise ValueError("base and directions go together")
        if base is None:
            self.base = None
            self.directions = None
            p = p_full
        else:
            self.base = to_vector(base)
            self.directions = tuple(to_vector(r) for r in directions)
            if len(self.base) != p_full or len(self.directions) != p_full:
                raise ValueError(f"affine map must target {p_full} canonical parameters")
            widths = {len(r) for r in self.directions}
            if len(widths) > 1:
                raise ValueError("ragged direction matrix")
            p = widths.pop() if widths else 0
        self.size = ProblemSize(size.n, size.m_le, size.m_eq, p)

    @property
    def canonical(self) -> bool:
        return self.base is None

    @property
    def p(self) -> int:
        return self.size.p

    def __repr__(self):
        kind = "canonical" if self.canonical else "affine"
        return f"SqpInstance({kind}, size={self.size}, c={[str(v) for v in self.c]})"

    def __eq__(self, other):
        if not isinstance(other, SqpInstance):
            return NotImplemented
        return (self.size, self.c, self.base, self.directions) == (
            other.size, other.c, other.base, other.directions)

    def full_params(self, y: Sequence) -> tuple[Fraction, ...]:
        y = to_vector(y)
        if len(y) != self.p:
            raise ValueError(f"expected {self.p} parameters, got {len(y)}")
        if self.canonical:
            return y
        return tuple(b + linalg.dot(row, y) for b, row in zip(self.base, self.directions))

    def constraints(self, y: Sequence) -> ConstraintData:
        full = self.full_params(y)
        jet = JetPoint.from_flat(self.size, full, with_objective=False)
        return ConstraintData(jet.a, jet.alpha, jet.b, jet.beta)

    def jet(self, x: Sequence, y: Sequence) -> JetPoint:
        """Exact jet at ``(x, y)`` (objective gradient ``x - c``)."""
        x = to_vector(x)
        data = self.constraints(y)
        return JetPoint(
            data.A,
            [linalg.dot(a, x) + al for a, al in zip(data.A, data.alpha)],
            data.B,
            [linalg.dot(b, x) + be for b, be in zip(data.B, data.beta)],
            [xi - ci for xi, ci in zip(x, self.c)],
            n=self.size.n,
        )

    def parameter_polys(self) -> list[Poly]:
        """Canonical coefficients as polynomials in this instance's ``y``."""
        n, p = self.size.n, self.p
        if self.canonical:
            return [Poly.y(n, p, k) for k in range(p)]
        out = []
        for b, row in zip(self.base, self.directions):
            q = Poly.constant(n, p, b)
            for k, d in enumerate(row):
                if d:
                    q = q + Poly.y(n, p, k) * d
            out.append(q)
        return out

    def to_problem(self) -> PolyProblem:
        n, p = self.size.n, self.p
        coeffs = self.parameter_polys()
        xs = [Poly.x(n, p, k) for k in range(n)]
        f = Poly.constant(n, p, 0)
        for xk, ck in zip(xs, self.c):
            f = f + (xk - ck) ** 2 * Fraction(1, 2)

        def affine(pos: int) -> Poly:
            q = coeffs[pos + n]
            for k in range(n):
                q = q + coeffs[pos + k] * xs[k]
            return q

        g = [affine((i - 1) * (n + 1)) for i in range(1, self.size.m_le + 1)]
        off = self.size.m_le * (n + 1)
        h = [affine(off + (j - 1) * (n + 1)) for j in range(1, self.size.m_eq + 1)]
        return PolyProblem(self.size, f, tuple(g), tuple(h))


@dataclass(frozen=True)
class NormalFormResult:
    sqp: SqpInstance
    y_bar: tuple
    jet_check: JetPoint

    @property
    def round_trip_ok(self) -> bool:
        return self.sqp.jet([0] * self.sqp.size.n, self.y_bar) == self.jet_check


def build_normal_form(jet: JetPoint) -> NormalFormResult:
    """Canonical quadratic problem whose jet at ``(0, y_bar)`` is ``jet``.

    The center is ``c = -a_star`` so that ``grad f(0) = -c = a_star``.
    """
    if not jet.has_objective:
        raise ValueError("normal form needs an objective gradient")
    size = ProblemSize(jet.n, jet.m_le, jet.m_eq)
    sqp = SqpInstance(size, [-v for v in jet.a_star])
    y_bar = jet.without_objective().flatten()
    return NormalFormResult(sqp, y_bar, jet)


def normal_form_jacobian(jet: JetPoint) -> tuple[list[list[Fraction]], Fraction]:
    """Jacobian of the normal form's jet map at ``(0, y_bar)`` and its determinant.

    Rows follow the jet order ``(a_i, g_i, ..., b_j, h_j, ..., grad f)``;
    columns follow ``(a_i, alpha_i, ..., b_j, beta_j, ..., x)``.  In this
    order the matrix is upper triangular with unit diagonal.
    """
    nf = build_normal_form(jet)
    prob = nf.sqp.to_problem()
    n, p = prob.size.n, prob.size.p
    comps: list[Poly] = []
    for g in prob.g:
        comps += list(grad_x(g))
        comps.append(g)
    for h in prob.h:
        comps += list(grad_x(h))
        comps.append(h)
    comps += list(grad_x(prob.f))
    x0 = [Fraction(0)] * n
    y0 = list(nf.y_bar)
    rows = []
    for q in comps:
        row = [eval_poly(q.diff_y(k), x0, y0) for k in range(p)]
        row += [eval_poly(q.diff_x(k), x0, y0) for k in range(n)]
        rows.append(row)
    return rows, linalg.det(rows)


def restrict_parameters(sqp: SqpInstance, base: Sequence, directions: Sequence[Sequence]) -> SqpInstance:
    """Affine slice ``y -> base + directions @ y`` of a canonical instance.

    ``directions`` is given row-wise (one row per canonical parameter).
    """
    if not sqp.canonical:
        raise ValueError("restriction starts from a canonical instance")
    dirs = [to_vector(r) for r in directions]
    if dirs and dirs[0] and linalg.rank(dirs) < len(dirs[0]):
        raise ValueError("direction matrix is rank deficient")
    size = ProblemSize(sqp.size.n, sqp.size.m_le, sqp.size.m_eq)
    return SqpInstance(size, sqp.c, base, dirs)
