"""Regular transformations between stationary-point and MFCQ-violation sets.

Each transformation acts on variables (``var_map``), on the target space of
the defining mapping (``tar_map``) and on combinatorial codes
(``code_action``).  Regularity itself is a theorem for the concrete
transformations here; what is checked computationally is the commutation
``f' o T_var = T_tar o f`` on sample points plus the code action.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Literal, Sequence

from .codes import compute_code
from .core import (
    CombinatorialCode,
    JetPoint,
    Poly,
    PolyProblem,
    ProblemSize,
    eval_poly,
    to_rational,
    to_vector,
)
from .jets import jet_mf, jet_sp

# ---------------------------------------------------------------------------
# code actions


@dataclass(frozen=True)
class CodeAction:
    i0_action: Literal["identity", "add_m_star"] = "identity"
    pair_action: Literal["identity", "star_each_pair"] = "identity"

    def apply(self, code: CombinatorialCode) -> CombinatorialCode:
        return code_action_apply(self, code)

    def then(self, other: CodeAction) -> CodeAction:
        """Composite action: ``self`` first, then ``other``.

        Both rewrites only add the label ``m_star`` and are idempotent, so the
        composite performs each rewrite requested by either factor.
        """
        return CodeAction(
            "add_m_star" if "add_m_star" in (self.i0_action, other.i0_action) else "identity",
            "star_each_pair" if "star_each_pair" in (self.pair_action, other.pair_action)
            else "identity",
        )


IDENTITY = CodeAction()


def code_action_apply(action: CodeAction, code: CombinatorialCode) -> CombinatorialCode:
    i0, pairs = code.i0, code.pairs
    if action.i0_action == "add_m_star":
        i0 = i0 | {code.m_star}
    if action.pair_action == "star_each_pair":
        pairs = frozenset((I | {code.m_star}, J) for I, J in pairs)
    return CombinatorialCode(frozenset(i0), frozenset(pairs), code.m_star, code.feasible)


# ---------------------------------------------------------------------------
# elementary transformations


@dataclass(frozen=True)
class Type1:
    """New variable ``x -> (x, g(x))``; ``1a`` keeps ``f``, ``1b`` swaps in the new variable."""

    subtype: Literal["1a", "1b"]
    inducing: tuple  # Poly components of g
    sign: Literal["+", "-"] = "+"
    code_action: CodeAction = IDENTITY
    kind: str = "type1"


@dataclass(frozen=True)
class Type2:
    """Target expanded by the constant block ``Q``."""

    Q: tuple
    code_action: CodeAction = CodeAction(pair_action="star_each_pair")
    kind: str = "type2"


@dataclass(frozen=True)
class Type3:
    """Target deformed by a diffeomorphism given as an explicit formula pair."""

    forward: Callable
    inverse: Callable
    domain: Callable
    code_action: CodeAction = IDENTITY
    kind: str = "type3"

    def check_inverse(self, samples: Sequence) -> list:
        """Samples on which ``forward(inverse(z)) != z``."""
        return [z for z in samples if self.domain(z) and self.forward(self.inverse(z)) != z]


ElementaryTransform = Type1 | Type2 | Type3


def chain_action(chain: Sequence[ElementaryTransform]) -> CodeAction:
    out = IDENTITY
    for t in chain:
        out = out.then(t.code_action)
    return out


# ---------------------------------------------------------------------------
# transformed objects


@dataclass(frozen=True)
class TransformedProblem:
    kind: str
    problem: PolyProblem | None
    functions: tuple  # defining functions f' as Polys (SLACK) or empty
    var_map: Callable
    tar_map: Callable
    source_map: Callable  # original defining mapping f(x, y)
    target_map: Callable  # new defining mapping f'(x', y')
    code_action: CodeAction | None
    provenance: tuple = field(default_factory=tuple)


def _split(point, n):
    return tuple(point[:n]), tuple(point[n:])


def apply_slack(f: Poly) -> TransformedProblem:
    """Slack variable for ``{f >= 0}``: ``f' = (x_{n+1}, x_{n+1} - f(x))``.

    The ``x``-space of ``f`` is the full variable vector (parameters of ``f``
    are treated as further variables).
    """
    n, p = f.n, f.p
    fe = f.embed(n + 1, p)
    slack = Poly.x(n + 1, p, n)
    f1, f2 = slack, slack - fe

    def var_map(x, y=()):
        x = to_vector(x)
        return x + (eval_poly(f, x, y),), tuple(to_vector(y))

    def source_map(x, y=()):
        return (eval_poly(f, x, y),)

    def target_map(x, y=()):
        return (eval_poly(f1, x, y), eval_poly(f2, x, y))

    def tar_map(z):
        return (z[0], Fraction(0))

    chain = (Type1("1b", (f,), "+"),)
    return TransformedProblem("slack", None, (f1, f2), var_map, tar_map, source_map,
                              target_map, None, chain)


def slack_contains(t: TransformedProblem, point: Sequence, y: Sequence = ()) -> bool:
    f1, f2 = t.functions
    return eval_poly(f2, point, y) == 0 and eval_poly(f1, point, y) >= 0


def sp2mf(prob: PolyProblem) -> TransformedProblem:
    """Objective becomes the constraint ``f(x, y) - y_{p+1} <= 0``."""
    s = prob.size
    n, p = s.n, s.p
    size = ProblemSize(n, s.m_le + 1, s.m_eq, p + 1)

    def lift(q: Poly) -> Poly:
        return q.embed(n, p + 1)

    G = [lift(g) for g in prob.g] + [lift(prob.f) - Poly.y(n, p + 1, p)]
    H = [lift(h) for h in prob.h]
    new = PolyProblem(size, Poly.constant(n, p + 1, 0), tuple(G), tuple(H))

    def var_map(x, y):
        return tuple(to_vector(x)), tuple(to_vector(y)) + (eval_poly(prob.f, x, y),)

    def source_map(x, y):
        return jet_sp(prob, x, y)

    def target_map(x, y):
        return jet_mf(new, x, y)

    def tar_map(jet: JetPoint) -> JetPoint:
        return sp2mf_target(jet)

    action = CodeAction(i0_action="add_m_star")
    chain = (Type1("1a", (prob.f,), "+", action),)
    return TransformedProblem("sp2mf", new, (), var_map, tar_map, source_map, target_map,
                              action, chain)


def sp2mf_target(jet: JetPoint) -> JetPoint:
    """``sigma -> (sigma, 0)``: the objective gradient becomes an active constraint."""
    return JetPoint(jet.a + (jet.a_star,), jet.alpha + (Fraction(0),), jet.b, jet.beta,
                    None, n=jet.n)


def t2_target(jet: JetPoint) -> JetPoint:
    """Append ``-1`` to every constraint gradient and use ``e_{n+1}`` as objective gradient."""
    if jet.m_eq:
        raise ValueError("defined for problems without equality constraints")
    a = [tuple(v) + (Fraction(-1),) for v in jet.a]
    a_star = (Fraction(0),) * jet.n + (Fraction(1),)
    return JetPoint(a, jet.alpha, (), (), a_star, n=jet.n + 1)


def q_bar(m: int, n: int) -> tuple:
    """Base point ``((-1)_i, 1, 0)`` of the deformation parameter."""
    return ((Fraction(-1),) * m, Fraction(1), (Fraction(0),) * n)


def _coerce_q(Q, m, n):
    col, top, v = Q
    col, v = to_vector(col), to_vector(v)
    top = to_rational(top)
    if len(col) != m or len(v) != n:
        raise ValueError("deformation parameter has wrong shape")
    return col, top, v


def in_phi_domain(Q, m: int, n: int) -> bool:
    col, top, _ = _coerce_q(Q, m, n)
    return all(c < 0 for c in col) and top > 0


def phi_deform(jet: JetPoint, Q) -> JetPoint:
    """Deformation of the target space; equals :func:`t2_target` at ``q_bar``.

    ``Q = (column, top, v)`` with ``column[i] < 0`` the last coordinate scale
    of constraint ``i``, ``top > 0`` the last coordinate of the objective
    gradient and ``v`` the objective direction.
    """
    if jet.m_eq:
        raise ValueError("defined for problems without equality constraints")
    col, top, v = _coerce_q(Q, jet.m_le, jet.n)
    if not (all(c < 0 for c in col) and top > 0):
        raise ValueError("deformation parameter outside its domain")
    a = [tuple(ci * (vk - ak) for vk, ak in zip(v, ai)) + (ci,) for ci, ai in zip(col, jet.a)]
    a_star = tuple(top * vk for vk in v) + (top,)
    return JetPoint(a, jet.alpha, (), (), a_star, n=jet.n + 1)


def phi_inverse(jet: JetPoint) -> tuple[JetPoint, tuple]:
    """Recover ``(jet_mf, Q)`` from a point in the image of :func:`phi_deform`."""
    n = jet.n - 1
    top = jet.a_star[-1]
    if top <= 0:
        raise ValueError("point outside the deformation's image")
    v = tuple(s / top for s in jet.a_star[:n])
    col, a = [], []
    for ai in jet.a:
        c = ai[-1]
        if c >= 0:
            raise ValueError("point outside the deformation's image")
        col.append(c)
        a.append(tuple(vk - s / c for vk, s in zip(v, ai[:n])))
    return JetPoint(a, jet.alpha, (), (), None, n=n), (tuple(col), top, v)


def mf2sp(prob: PolyProblem) -> TransformedProblem:
    """Minimise ``x_{n+1}`` subject to ``g_i(x, y) - x_{n+1} <= 0``."""
    s = prob.size
    if s.m_eq:
        raise ValueError("mf2sp is only defined without equality constraints")
    n, p = s.n, s.p
    size = ProblemSize(n + 1, s.m_le, 0, p)
    t = Poly.x(n + 1, p, n)
    G = [g.embed(n + 1, p) - t for g in prob.g]
    new = PolyProblem(size, t, tuple(G), ())

    def var_map(x, y):
        return tuple(to_vector(x)) + (Fraction(0),), tuple(to_vector(y))

    def source_map(x, y):
        return jet_mf(prob, x, y)

    def target_map(x, y):
        return jet_sp(new, x, y), eval_poly(new.f, x, y)

    def tar_map(jet: JetPoint):
        return phi_deform(jet, q_bar(jet.m_le, jet.n)), Fraction(0)

    m = s.m_le
    t2 = Type2(q_bar(m, n))
    t3 = Type3(
        forward=lambda pair: phi_deform(*pair),
        inverse=phi_inverse,
        domain=lambda z: z[1] is None or in_phi_domain(z[1], z[0].m_le, z[0].n),
    )
    t1 = Type1("1a", (Poly.constant(n, p, 0),), "+")
    action = chain_action((t2, t3, t1))
    return TransformedProblem("mf2sp", new, (), var_map, tar_map, source_map, target_map,
                              action, (t2, t3, t1))


# ---------------------------------------------------------------------------
# verification


@dataclass
class CommutationReport:
    checked: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def _jet_of(value) -> JetPoint | None:
    if isinstance(value, JetPoint):
        return value
    if isinstance(value, tuple) and value and isinstance(value[0], JetPoint):
        return value[0]
    return None


def verify_commutation(t: TransformedProblem, samples: Sequence) -> CommutationReport:
    """Check ``f' o T_var == T_tar o f`` exactly and the code action per sample.

    ``samples`` holds ``(x, y)`` pairs in the source variables.
    """
    report = CommutationReport()
    for x, y in samples:
        report.checked += 1
        label = f"x={[str(v) for v in to_vector(x)]} y={[str(v) for v in to_vector(y)]}"
        before = t.source_map(x, y)
        xp, yp = t.var_map(x, y)
        try:
            after = t.target_map(xp, yp)
        except ValueError as exc:
            report.failures.append(f"{label}: target mapping failed ({exc})")
            continue
        if after != t.tar_map(before):
            report.failures.append(f"{label}: f' o T_var != T_tar o f")
            continue
        if t.code_action is None:
            continue
        jb, ja = _jet_of(before), _jet_of(after)
        if jb is None or ja is None:
            continue
        expected = t.code_action.apply(compute_code(jb))
        got = compute_code(ja)
        if got != expected:
            report.failures.append(f"{label}: code {got.describe()} != action image {expected.describe()}")
    return report
