"""Shared data model: exact scalars, polynomials, problem sizes, jets and codes.

Inequality indices are 1-based labels ``1..m_le``; the objective carries the
label ``m_star = m_le + 1``.  Equality indices are 1-based labels ``1..m_eq``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational as _RationalABC
from typing import Iterable, Mapping, Sequence

Rational = Fraction


def to_rational(value) -> Fraction:
    """Convert ints, floats, Fractions and decimal/fraction strings exactly."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(value, (int, _RationalABC)):
        return Fraction(value)
    if isinstance(value, float):
        # every binary64 value is a dyadic rational
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(value)


def to_vector(values: Iterable) -> tuple[Fraction, ...]:
    return tuple(to_rational(v) for v in values)


@dataclass(frozen=True)
class ProblemSize:
    n: int
    m_le: int = 0
    m_eq: int = 0
    p: int = 0

    def __post_init__(self):
        for name in ("n", "m_le", "m_eq", "p"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def m_star(self) -> int:
        return self.m_le + 1

    @property
    def jet_dim(self) -> int:
        return jet_dim(self.n, self.m_le, self.m_eq)

    @property
    def mf_jet_dim(self) -> int:
        return self.jet_dim - self.n


def jet_dim(n: int, m_le: int, m_eq: int) -> int:
    return n * m_le + m_le + n * m_eq + m_eq + n


# ---------------------------------------------------------------------------
# polynomials

Monomial = tuple[tuple[int, ...], tuple[int, ...]]


class Poly:
    """Multivariate polynomial with rational coefficients in ``(x, y)``.

    Terms are stored as ``{(x_exponents, y_exponents): coefficient}`` with no
    zero coefficients.  Instances are immutable and hashable.
    """

    __slots__ = ("n", "p", "_terms", "_key")

    def __init__(self, n: int, p: int, terms: Mapping[Monomial, object] | Iterable = ()):
        self.n = n
        self.p = p
        acc: dict[Monomial, Fraction] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for mono, coeff in items:
            xe, ye = mono
            xe, ye = tuple(int(e) for e in xe), tuple(int(e) for e in ye)
            if len(xe) != n or len(ye) != p:
                raise ValueError(f"monomial {mono} does not match n={n}, p={p}")
            if any(e < 0 for e in xe + ye):
                raise ValueError("negative exponent")
            c = to_rational(coeff)
            acc[(xe, ye)] = acc.get((xe, ye), Fraction(0)) + c
        self._terms = {k: v for k, v in acc.items() if v != 0}
        self._key = None

    # constructors ---------------------------------------------------------
    @classmethod
    def constant(cls, n: int, p: int, value=0) -> Poly:
        return cls(n, p, {((0,) * n, (0,) * p): value})

    @classmethod
    def x(cls, n: int, p: int, k: int) -> Poly:
        """The state variable ``x_{k+1}`` (0-based position ``k``)."""
        xe = [0] * n
        xe[k] = 1
        return cls(n, p, {(tuple(xe), (0,) * p): 1})

    @classmethod
    def y(cls, n: int, p: int, k: int) -> Poly:
        """The parameter ``y_{k+1}`` (0-based position ``k``)."""
        ye = [0] * p
        ye[k] = 1
        return cls(n, p, {((0,) * n, tuple(ye)): 1})

    @classmethod
    def affine_x(cls, n: int, p: int, coeffs: Sequence, const=0) -> Poly:
        """``coeffs . x + const``."""
        terms = [(((0,) * n, (0,) * p), const)]
        for k, c in enumerate(coeffs):
            xe = [0] * n
            xe[k] = 1
            terms.append(((tuple(xe), (0,) * p), c))
        return cls(n, p, terms)

    # inspection -------------------------------------------------------------
    @property
    def terms(self) -> dict[Monomial, Fraction]:
        return dict(self._terms)

    def sorted_terms(self) -> list[tuple[Monomial, Fraction]]:
        return sorted(self._terms.items())

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        return max((sum(xe) + sum(ye) for xe, ye in self._terms), default=0)

    def used_x(self) -> set[int]:
        return {k for xe, _ in self._terms for k, e in enumerate(xe) if e}

    def used_y(self) -> set[int]:
        return {k for _, ye in self._terms for k, e in enumerate(ye) if e}

    def _sortkey(self):
        if self._key is None:
            self._key = (self.n, self.p, tuple(sorted(self._terms.items())))
        return self._key

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self._sortkey() == other._sortkey()
        if isinstance(other, (int, Fraction)):
            return self == Poly.constant(self.n, self.p, other)
        return NotImplemented

    def __hash__(self):
        return hash(self._sortkey())

    def __repr__(self):
        return f"Poly(n={self.n}, p={self.p}, {self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for (xe, ye), c in sorted(self._terms.items(), reverse=True):
            factors = [f"x{k + 1}" + (f"^{e}" if e > 1 else "") for k, e in enumerate(xe) if e]
            factors += [f"y{k + 1}" + (f"^{e}" if e > 1 else "") for k, e in enumerate(ye) if e]
            if not factors:
                parts.append(str(c))
            elif c == 1:
                parts.append("*".join(factors))
            elif c == -1:
                parts.append("-" + "*".join(factors))
            else:
                parts.append(f"{c}*" + "*".join(factors))
        return " + ".join(parts).replace("+ -", "- ")

    # arithmetic -------------------------------------------------------------
    def _coerce(self, other) -> Poly:
        if isinstance(other, Poly):
            if (other.n, other.p) != (self.n, self.p):
                raise ValueError("polynomials live in different variable spaces")
            return other
        return Poly.constant(self.n, self.p, other)

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self._terms)
        for k, v in other._terms.items():
            terms[k] = terms.get(k, Fraction(0)) + v
        return Poly(self.n, self.p, terms)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.n, self.p, {k: -v for k, v in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Poly):
            c = to_rational(other)
            return Poly(self.n, self.p, {k: v * c for k, v in self._terms.items()})
        other = self._coerce(other)
        out: dict[Monomial, Fraction] = {}
        for (xa, ya), ca in self._terms.items():
            for (xb, yb), cb in other._terms.items():
                key = (
                    tuple(i + j for i, j in zip(xa, xb)),
                    tuple(i + j for i, j in zip(ya, yb)),
                )
                out[key] = out.get(key, Fraction(0)) + ca * cb
        return Poly(self.n, self.p, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = Poly.constant(self.n, self.p, 1)
        for _ in range(k):
            out = out * self
        return out

    # calculus and evaluation ----------------------------------------------
    def __call__(self, x: Sequence, y: Sequence = ()) -> Fraction:
        return eval_poly(self, x, y)

    def diff_x(self, k: int) -> Poly:
        out = {}
        for (xe, ye), c in self._terms.items():
            e = xe[k]
            if e:
                nxe = xe[:k] + (e - 1,) + xe[k + 1:]
                out[(nxe, ye)] = c * e
        return Poly(self.n, self.p, out)

    def diff_y(self, k: int) -> Poly:
        out = {}
        for (xe, ye), c in self._terms.items():
            e = ye[k]
            if e:
                nye = ye[:k] + (e - 1,) + ye[k + 1:]
                out[(xe, nye)] = c * e
        return Poly(self.n, self.p, out)

    def embed(self, n: int, p: int, x_pos: Sequence[int] | None = None,
              y_pos: Sequence[int] | None = None) -> Poly:
        """Re-home the polynomial in a larger ``(n, p)`` variable space.

        ``x_pos[k]`` is the new 0-based position of ``x_{k+1}``; defaults keep
        positions unchanged.
        """
        x_pos = list(range(self.n)) if x_pos is None else list(x_pos)
        y_pos = list(range(self.p)) if y_pos is None else list(y_pos)
        out = {}
        for (xe, ye), c in self._terms.items():
            nxe, nye = [0] * n, [0] * p
            for k, e in enumerate(xe):
                nxe[x_pos[k]] += e
            for k, e in enumerate(ye):
                nye[y_pos[k]] += e
            out[(tuple(nxe), tuple(nye))] = c
        return Poly(n, p, out)


def eval_poly(poly: Poly, x: Sequence, y: Sequence = ()) -> Fraction:
    """Exact value of ``poly`` at ``(x, y)``."""
    if len(x) != poly.n or len(y) != poly.p:
        raise ValueError(
            f"point has dimensions ({len(x)}, {len(y)}), polynomial expects ({poly.n}, {poly.p})"
        )
    xv = [to_rational(v) for v in x]
    yv = [to_rational(v) for v in y]
    total = Fraction(0)
    for (xe, ye), c in poly._terms.items():
        term = c
        for v, e in zip(xv, xe):
            if e:
                term *= v ** e
        for v, e in zip(yv, ye):
            if e:
                term *= v ** e
        total += term
    return total


@functools.lru_cache(maxsize=4096)
def grad_x(poly: Poly) -> tuple[Poly, ...]:
    """Formal partial derivatives in the state variables."""
    return tuple(poly.diff_x(k) for k in range(poly.n))


# ---------------------------------------------------------------------------
# problems


@dataclass(frozen=True)
class PolyProblem:
    """``minimize f(x, y)`` subject to ``g_i <= 0`` and ``h_j = 0``."""

    size: ProblemSize
    f: Poly
    g: tuple[Poly, ...] = ()
    h: tuple[Poly, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "g", tuple(self.g))
        object.__setattr__(self, "h", tuple(self.h))


@dataclass
class ValidationReport:
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def validate_problem(prob: PolyProblem) -> ValidationReport:
    size = prob.size
    report = ValidationReport()
    if len(prob.g) != size.m_le:
        report.failures.append(f"g has {len(prob.g)} entries, expected m_le={size.m_le}")
    if len(prob.h) != size.m_eq:
        report.failures.append(f"h has {len(prob.h)} entries, expected m_eq={size.m_eq}")
    labelled = [("f", prob.f)]
    labelled += [(f"g[{i + 1}]", q) for i, q in enumerate(prob.g)]
    labelled += [(f"h[{j + 1}]", q) for j, q in enumerate(prob.h)]
    for name, q in labelled:
        bad_x = sorted(k + 1 for k in q.used_x() if k >= size.n)
        bad_y = sorted(k + 1 for k in q.used_y() if k >= size.p)
        if bad_x:
            report.failures.append(f"{name} references x{bad_x} but n={size.n}")
        if bad_y:
            report.failures.append(f"{name} references y{bad_y} but p={size.p}")
        if not bad_x and not bad_y and (q.n, q.p) != (size.n, size.p):
            report.failures.append(
                f"{name} declared over (n={q.n}, p={q.p}), problem is (n={size.n}, p={size.p})"
            )
    return report


# ---------------------------------------------------------------------------
# jets and codes


def _vecs(rows) -> tuple[tuple[Fraction, ...], ...]:
    return tuple(to_vector(r) for r in rows)


@dataclass(frozen=True)
class JetPoint:
    """A point of the reduced jet space.

    ``a``/``alpha`` are the inequality gradients and values, ``b``/``beta`` the
    equality gradients and values and ``a_star`` the objective gradient.  An
    MF-jet (objective deleted) has ``a_star is None`` and needs ``n`` given.
    """

    a: tuple = ()
    alpha: tuple = ()
    b: tuple = ()
    beta: tuple = ()
    a_star: tuple | None = None
    n: int = -1

    def __post_init__(self):
        a, b = _vecs(self.a), _vecs(self.b)
        a_star = None if self.a_star is None else to_vector(self.a_star)
        dims = {len(v) for v in a + b}
        if a_star is not None:
            dims.add(len(a_star))
        if self.n >= 0:
            dims.add(self.n)
        if len(dims) > 1:
            raise ValueError(f"inconsistent gradient dimensions {sorted(dims)}")
        if not dims:
            raise ValueError("jet dimension n cannot be inferred; pass n=")
        alpha, beta = to_vector(self.alpha), to_vector(self.beta)
        if len(alpha) != len(a) or len(beta) != len(b):
            raise ValueError("value/gradient counts differ")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "a_star", a_star)
        object.__setattr__(self, "n", dims.pop())

    @property
    def m_le(self) -> int:
        return len(self.a)

    @property
    def m_eq(self) -> int:
        return len(self.b)

    @property
    def m_star(self) -> int:
        return self.m_le + 1

    @property
    def has_objective(self) -> bool:
        return self.a_star is not None

    @property
    def size(self) -> ProblemSize:
        return ProblemSize(self.n, self.m_le, self.m_eq)

    def gradient(self, i: int) -> tuple[Fraction, ...]:
        """Inequality gradient for label ``i``; ``m_star`` gives the objective."""
        if i == self.m_star:
            if self.a_star is None:
                raise IndexError("MF-jet has no objective gradient")
            return self.a_star
        return self.a[i - 1]

    def flatten(self) -> tuple[Fraction, ...]:
        out: list[Fraction] = []
        for ai, al in zip(self.a, self.alpha):
            out += ai
            out.append(al)
        for bj, be in zip(self.b, self.beta):
            out += bj
            out.append(be)
        if self.a_star is not None:
            out += self.a_star
        return tuple(out)

    @classmethod
    def from_flat(cls, size: ProblemSize, values: Sequence, with_objective: bool = True) -> JetPoint:
        vals = to_vector(values)
        n = size.n
        expected = size.jet_dim if with_objective else size.mf_jet_dim
        if len(vals) != expected:
            raise ValueError(f"expected {expected} jet coordinates, got {len(vals)}")
        pos = 0
        a, alpha, b, beta = [], [], [], []
        for _ in range(size.m_le):
            a.append(vals[pos:pos + n])
            alpha.append(vals[pos + n])
            pos += n + 1
        for _ in range(size.m_eq):
            b.append(vals[pos:pos + n])
            beta.append(vals[pos + n])
            pos += n + 1
        a_star = vals[pos:pos + n] if with_objective else None
        return cls(a, alpha, b, beta, a_star, n=n)

    def without_objective(self) -> JetPoint:
        return JetPoint(self.a, self.alpha, self.b, self.beta, None, n=self.n)

    def scaled(self, factor) -> JetPoint:
        """All gradients multiplied by ``factor``; values untouched."""
        s = to_rational(factor)
        return JetPoint(
            [[s * v for v in ai] for ai in self.a], self.alpha,
            [[s * v for v in bj] for bj in self.b], self.beta,
            None if self.a_star is None else [s * v for v in self.a_star], n=self.n,
        )


Pair = tuple[frozenset, frozenset]


def make_pair(I: Iterable[int], J: Iterable[int] = ()) -> Pair:
    return (frozenset(I), frozenset(J))


@dataclass(frozen=True)
class CombinatorialCode:
    """Active set ``i0`` plus the minimal multiplier-supporting pairs.

    Equality compares ``(i0, pairs, feasible)``; ``m_star`` only decides the
    SP/MF partition.
    """

    i0: frozenset
    pairs: frozenset
    m_star: int = field(compare=False)
    feasible: bool = True

    @property
    def sp_pairs(self) -> frozenset:
        return frozenset(pr for pr in self.pairs if self.m_star in pr[0])

    @property
    def mf_pairs(self) -> frozenset:
        return frozenset(pr for pr in self.pairs if self.m_star not in pr[0])

    @property
    def is_stationary(self) -> bool:
        return bool(self.sp_pairs)

    @property
    def mfcq_violated(self) -> bool:
        return bool(self.mf_pairs)

    def format_pair(self, pair: Pair) -> str:
        I, J = pair
        iv = ",".join("m*" if i == self.m_star else str(i) for i in sorted(I))
        jv = ",".join(str(j) for j in sorted(J))
        return f"({{{iv}}},{{{jv}}})"

    def describe(self) -> str:
        i0 = ",".join(str(i) for i in sorted(self.i0))
        pairs = ", ".join(self.format_pair(pr) for pr in sorted_pairs(self.pairs))
        return f"I0={{{i0}}} pairs={{{pairs}}}"

    def to_json(self) -> dict:
        def enc(prs):
            return [{"I": sorted(I), "J": sorted(J)} for I, J in sorted_pairs(prs)]

        return {
            "feasible": self.feasible,
            "i0": sorted(self.i0),
            "m_star": self.m_star,
            "sp_pairs": enc(self.sp_pairs),
            "mf_pairs": enc(self.mf_pairs),
        }


def sorted_pairs(pairs: Iterable[Pair]) -> list[Pair]:
    return sorted(pairs, key=lambda pr: (len(pr[0]) + len(pr[1]), sorted(pr[0]), sorted(pr[1])))


@dataclass(frozen=True)
class Multipliers:
    mu: Mapping[int, Fraction] = field(default_factory=dict)
    lam: Mapping[int, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        if any(v < 0 for v in self.mu.values()):
            raise ValueError("inequality multipliers must be non-negative")
