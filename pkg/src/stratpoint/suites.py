"""Seeded random instances and the verification suites behind ``stratpoint verify``.

Every generator takes a :class:`random.Random`; reports contain only counts
and failure descriptions so that equal seeds give byte-identical output.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .codes import (
    brute_force_code,
    compute_code,
    in_closure,
    perturb_toward_sp,
)
from .core import JetPoint, Poly, PolyProblem, ProblemSize, eval_poly
from .jets import SqpInstance, build_normal_form, jet_mf, jet_sp, normal_form_jacobian
from .problems import BUILTINS
from .qp import enumerate_qp, kkt_residual, solve_qp, stationary_map
from .tracer import boundary_probe
from .transforms import (
    chain_action,
    code_action_apply,
    in_phi_domain,
    mf2sp,
    phi_deform,
    sp2mf,
    t2_target,
    verify_commutation,
)

PERTURB_STEPS = tuple(Fraction(1, 10**k) for k in range(1, 7))

# ---------------------------------------------------------------------------
# generators


def _vec(rng: random.Random, n: int, lo: int = -3, hi: int = 3) -> list[int]:
    return [rng.randint(lo, hi) for _ in range(n)]


def random_jet(rng: random.Random, max_n: int = 3, max_le: int = 4, max_eq: int = 2,
               lo: int = -3, hi: int = 3) -> JetPoint:
    """Integer jet; values are biased towards 0 so that codes are nontrivial."""
    n = rng.randint(1, max_n)
    m_le, m_eq = rng.randint(0, max_le), rng.randint(0, max_eq)
    a = [_vec(rng, n, lo, hi) for _ in range(m_le)]
    alpha = [0 if rng.random() < 0.7 else rng.randint(lo, hi) for _ in range(m_le)]
    b = [_vec(rng, n, lo, hi) for _ in range(m_eq)]
    beta = [0 if rng.random() < 0.85 else rng.randint(lo, hi) for _ in range(m_eq)]
    return JetPoint(a, alpha, b, beta, _vec(rng, n, lo, hi), n=n)


def dense_jet(rng: random.Random, max_n: int = 3, max_le: int = 4, max_eq: int = 2) -> JetPoint:
    """Feasible jet with a planted linear relation among its gradients."""
    n = rng.randint(1, max_n)
    m_le, m_eq = rng.randint(0, max_le), rng.randint(0, max_eq)
    a = [_vec(rng, n, -2, 2) for _ in range(m_le)]
    b = [_vec(rng, n, -2, 2) for _ in range(m_eq)]
    star = _vec(rng, n, -2, 2)
    grads = a + b + [star]
    k = len(grads)
    if k >= 2:
        target = rng.randrange(k)
        others = [t for t in range(k) if t != target]
        support = rng.sample(others, rng.randint(1, min(len(others), n)))
        coeffs = {t: rng.randint(-2, 2) for t in support}
        combo = [sum(coeffs[t] * grads[t][r] for t in support) for r in range(n)]
        grads[target] = combo
    a, b, star = grads[:m_le], grads[m_le:m_le + m_eq], grads[-1]
    alpha = [0 if rng.random() < 0.8 else -rng.randint(1, 2) for _ in range(m_le)]
    return JetPoint(a, alpha, b, [0] * m_eq, star, n=n)


def mf_not_sp_jet(rng: random.Random) -> JetPoint:
    """Jet in the MFCQ-violation set but not in the stationary set (rejection sampling)."""
    while True:
        jet = dense_jet(rng)
        code = compute_code(jet)
        if code.mfcq_violated and not code.is_stationary:
            return jet


def random_qp(rng: random.Random, max_n: int = 4, max_le: int = 6, max_eq: int = 2):
    n = rng.randint(1, max_n)
    m_le, m_eq = rng.randint(0, max_le), rng.randint(0, max_eq)
    c = _vec(rng, n)
    A = [_vec(rng, n) for _ in range(m_le)]
    alpha = _vec(rng, m_le)
    B = [_vec(rng, n) for _ in range(m_eq)]
    beta = _vec(rng, m_eq)
    return c, A, alpha, B, beta


def random_sqp(rng: random.Random, max_n: int = 3, max_le: int = 3, max_eq: int = 1):
    n = rng.randint(1, max_n)
    size = ProblemSize(n, rng.randint(0, max_le), rng.randint(0, max_eq))
    return SqpInstance(size, _vec(rng, n))


def random_sqp_params(rng: random.Random, sqp: SqpInstance) -> list[int]:
    return _vec(rng, sqp.p)


def _pushed_below(a: list[int], d: list[int]) -> list[int]:
    """Shift ``a`` along ``d`` until ``a . d < 0``."""
    s = sum(u * v for u, v in zip(a, d))
    dd = sum(v * v for v in d)
    if s < 0:
        return a
    k = s // dd + 1
    return [u - k * v for u, v in zip(a, d)]


def probe_instance(rng: random.Random, max_n: int = 3, max_le: int = 3):
    """Inequality-only canonical instance plus a distinguished label."""
    n = rng.randint(1, max_n)
    sqp = SqpInstance(ProblemSize(n, rng.randint(1, max_le), 0), _vec(rng, n))
    return sqp, rng.randint(1, sqp.size.m_le)


def probe_node(rng: random.Random, sqp: SqpInstance, m: int) -> list[int]:
    """Parameters without ``alpha_m`` for which every ``alpha_m`` is feasible.

    All gradients get a negative inner product with a common direction ``d``,
    so ``t * d`` is strictly feasible for large ``t`` whatever the offsets.
    """
    n, m_le = sqp.size.n, sqp.size.m_le
    d = [0] * n
    while not any(d):
        d = _vec(rng, n)
    out = []
    for i in range(1, m_le + 1):
        out += _pushed_below(_vec(rng, n), d)
        if i != m:
            out.append(rng.randint(-3, 0))
    return out


def random_poly(rng: random.Random, n: int, p: int, degree: int = 2, terms: int = 3) -> Poly:
    q = Poly.constant(n, p, rng.randint(-2, 2))
    for _ in range(terms):
        xe = [0] * n
        ye = [0] * p
        for _ in range(rng.randint(1, degree)):
            if p and rng.random() < 0.3:
                ye[rng.randrange(p)] += 1
            else:
                xe[rng.randrange(n)] += 1
        q = q + Poly(n, p, {(tuple(xe), tuple(ye)): rng.randint(-3, 3)})
    return q


def random_problem(rng: random.Random, eq: bool = True) -> PolyProblem:
    n, p = rng.randint(1, 2), rng.randint(0, 2)
    m_le, m_eq = rng.randint(0, 2), (rng.randint(0, 1) if eq else 0)
    return PolyProblem(ProblemSize(n, m_le, m_eq, p), random_poly(rng, n, p),
                       tuple(random_poly(rng, n, p) for _ in range(m_le)),
                       tuple(random_poly(rng, n, p) for _ in range(m_eq)))


def wedge_problem(rng: random.Random) -> PolyProblem:
    """Inequality-only problem with a planted pair ``g_2 = -c * g_1 + y-term``."""
    n, p = rng.randint(1, 2), rng.randint(0, 1)
    g1 = random_poly(rng, n, p, degree=2, terms=2)
    shift = Poly.y(n, p, 0) if p else Poly.constant(n, p, 0)
    g2 = g1 * (-rng.randint(1, 3)) + shift
    gs = [g1, g2] + [random_poly(rng, n, p) for _ in range(rng.randint(0, 1))]
    return PolyProblem(ProblemSize(n, len(gs), 0, p), Poly.constant(n, p, 0), tuple(gs), ())


def sample_points(rng: random.Random, n: int, p: int, count: int, lo: int = -2, hi: int = 2):
    """Points on a half-integer grid (coarse enough to hit zero sets)."""
    pts = []
    for _ in range(count):
        x = tuple(Fraction(rng.randint(2 * lo, 2 * hi), 2) for _ in range(n))
        y = tuple(Fraction(rng.randint(2 * lo, 2 * hi), 2) for _ in range(p))
        pts.append((x, y))
    return pts


def grid_points(n: int, p: int, values=(-1, 0, 1)):
    return [(tuple(map(Fraction, xs)), tuple(map(Fraction, ys)))
            for xs in itertools.product(values, repeat=n)
            for ys in itertools.product(values, repeat=p)]


def random_phi_parameter(rng: random.Random, m: int, n: int):
    col = tuple(Fraction(-rng.randint(1, 5), rng.randint(1, 3)) for _ in range(m))
    top = Fraction(rng.randint(1, 5), rng.randint(1, 3))
    v = tuple(Fraction(rng.randint(-3, 3), rng.randint(1, 2)) for _ in range(n))
    return col, top, v


def example51_jet(rng: random.Random) -> JetPoint:
    prob = BUILTINS["example-5.1"].obj
    x = tuple(rng.randint(-2, 2) for _ in range(2))
    y = tuple(rng.randint(-2, 2) for _ in range(3))
    return jet_sp(prob, x, y)


# ---------------------------------------------------------------------------
# checks shared by the CLI and the acceptance tests


@dataclass
class Check:
    name: str
    passed: int = 0
    total: int = 0
    failures: list = field(default_factory=list)

    def record(self, ok: bool, detail: str = ""):
        self.total += 1
        if ok:
            self.passed += 1
        elif len(self.failures) < 5:
            self.failures.append(detail)

    @property
    def ok(self) -> bool:
        return self.passed == self.total

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return f"{status} {self.name}: {self.passed}/{self.total}"


def check_code_oracle(seed: int, trials: int) -> Check:
    rng = random.Random(seed)
    chk = Check("code engine vs brute-force oracle")
    for t in range(trials):
        jet = random_jet(rng)
        a, b = compute_code(jet), brute_force_code(jet)
        chk.record(a == b, f"trial {t}: {a.describe()} vs {b.describe()}")
    return chk


def check_closure(seed: int, trials: int, dense: int | None = None) -> Check:
    rng = random.Random(seed)
    drng = random.Random(seed + 1)
    dense = trials if dense is None else dense
    chk = Check("closure identity")
    jets = [random_jet(rng) for _ in range(trials)] + [dense_jet(drng) for _ in range(dense)]
    for t, jet in enumerate(jets):
        code = compute_code(jet)
        chk.record(in_closure(jet) == (code.is_stationary or code.mfcq_violated),
                   f"jet {t}: {code.describe()}")
    return chk


def check_perturbation(seed: int, trials: int) -> Check:
    rng = random.Random(seed)
    chk = Check("perturbation into the stationary set")
    for t in range(trials):
        jet = mf_not_sp_jet(rng)
        for step in PERTURB_STEPS:
            chk.record(compute_code(perturb_toward_sp(jet, step)).is_stationary,
                       f"jet {t} step {step}")
    return chk


def check_qp_oracle(seed: int, trials: int) -> Check:
    rng = random.Random(seed)
    chk = Check("QP solver vs active-subset enumeration")
    for t in range(trials):
        c, A, alpha, B, beta = random_qp(rng)
        sol = solve_qp(c, A, alpha, B, beta)
        ref = enumerate_qp(c, A, alpha, B, beta)
        ok = sol.status == ref.status and sol.x_star == ref.x_star
        if ok and sol.optimal:
            ok = all(v == 0 for v in kkt_residual(c, A, B, sol))
        chk.record(ok, f"trial {t}: {sol.status} {sol.x_star} vs {ref.status} {ref.x_star}")
    return chk


def check_normal_form(seed: int, trials: int) -> Check:
    rng = random.Random(seed)
    chk = Check("normal-form round trip and unit determinant")
    for t in range(trials):
        jet = random_jet(rng, max_n=3, max_le=3, max_eq=2)
        nf = build_normal_form(jet)
        _, det = normal_form_jacobian(jet)
        chk.record(nf.round_trip_ok and abs(det) == 1, f"trial {t}: det={det}")
    return chk


def check_sp2mf(seed: int, trials: int) -> Check:
    rng = random.Random(seed)
    chk = Check("SP2MF maps stationary points to MFCQ violations")
    done = 0
    while done < trials:
        sqp = random_sqp(rng)
        y = random_sqp_params(rng, sqp)
        sp = stationary_map(sqp, y)
        if sp.x is None:
            continue
        done += 1
        prob = sqp.to_problem()
        tp = sp2mf(prob)
        xp, yp = tp.var_map(sp.x, y)
        after = compute_code(jet_mf(tp.problem, xp, yp))
        m_star = prob.size.m_star
        ok = (after == code_action_apply(tp.code_action, sp.code) and after.mfcq_violated
              and m_star in after.i0)
        chk.record(ok, f"trial {done}: {after.describe()} vs {sp.code.describe()}")
    return chk


def check_mf2sp_problem(prob: PolyProblem, points) -> tuple[int, int, list]:
    tp = mf2sp(prob)
    agree, fails = 0, []
    for x, y in points:
        before = compute_code(jet_mf(prob, x, y))
        in_mf = before.feasible and before.mfcq_violated
        xp, yp = tp.var_map(x, y)
        after = compute_code(jet_sp(tp.problem, xp, yp))
        F = eval_poly(tp.problem.f, xp, yp)
        stationary = after.feasible and after.is_stationary and F == 0
        ok = in_mf == stationary and after == code_action_apply(tp.code_action, before)
        if ok:
            agree += 1
        else:
            fails.append(f"x={[str(v) for v in x]} y={[str(v) for v in y]}")
    return agree, len(points), fails


def check_mf2sp(seed: int, trials: int) -> Check:
    rng = random.Random(seed)
    chk = Check("MF2SP equivalence and code action")
    problems = [BUILTINS["double-wedge"].obj] + [wedge_problem(rng) for _ in range(trials)]
    for prob in problems:
        pts = grid_points(prob.size.n, prob.size.p, (-1, Fraction(-1, 2), 0, Fraction(1, 2), 1))
        agree, total, fails = check_mf2sp_problem(prob, pts)
        chk.passed += agree
        chk.total += total
        chk.failures += fails[: max(0, 5 - len(chk.failures))]
    return chk


def check_commutation(seed: int, trials: int) -> Check:
    rng = random.Random(seed)
    chk = Check("commutation of SLACK, SP2MF and MF2SP")
    from .transforms import apply_slack

    problems = [b.obj for b in BUILTINS.values() if isinstance(b.obj, PolyProblem)]
    problems += [random_problem(rng) for _ in range(trials)]
    for k, prob in enumerate(problems):
        pts = sample_points(rng, prob.size.n, prob.size.p, 4)
        transforms = [sp2mf(prob)]
        if prob.size.m_eq == 0:
            transforms.append(mf2sp(prob))
        for g in prob.g:
            transforms.append(apply_slack(g))
        for tp in transforms:
            rep = verify_commutation(tp, pts)
            chk.record(rep.ok, f"problem {k} {tp.kind}: {rep.failures[:1]}")
    return chk


def check_phi(seed: int, jets: int, params: int) -> Check:
    rng = random.Random(seed)
    chk = Check("deformation preserves the starred code")
    for t in range(jets):
        n = rng.randint(1, 3)
        m = rng.randint(0, 4)
        jet = JetPoint([_vec(rng, n) for _ in range(m)],
                       [0 if rng.random() < 0.7 else rng.randint(-3, 3) for _ in range(m)],
                       (), (), None, n=n)
        if m >= 2 and rng.random() < 0.5:
            jet = JetPoint([list(jet.a[0]), [-2 * v for v in jet.a[0]]] + [list(r) for r in jet.a[2:]],
                           [0, 0] + list(jet.alpha[2:]), (), (), None, n=n)
        ref = compute_code(t2_target(jet))
        for _ in range(params):
            Q = random_phi_parameter(rng, m, n)
            assert in_phi_domain(Q, m, n)
            chk.record(compute_code(phi_deform(jet, Q)) == ref, f"jet {t}")
    return chk


def check_composition(seed: int, trials: int) -> Check:
    rng = random.Random(seed)
    chk = Check("code action of a chain equals the composite action")
    from .core import CombinatorialCode

    for t in range(trials):
        prob = wedge_problem(rng)
        tp = mf2sp(prob)
        composite = chain_action(tp.provenance)
        m_star = prob.size.m_star
        labels = list(range(1, m_star))
        i0 = frozenset(i for i in labels if rng.random() < 0.5)
        pairs = frozenset((frozenset(rng.sample(labels, rng.randint(1, len(labels)))), frozenset())
                          for _ in range(rng.randint(0, 2)))
        code = CombinatorialCode(i0, pairs, m_star)
        stepwise = code
        for et in tp.provenance:
            stepwise = code_action_apply(et.code_action, stepwise)
        chk.record(stepwise == composite.apply(code) == tp.code_action.apply(code), f"trial {t}")
    return chk


def check_boundary(seed: int, instances: int, nodes: int) -> Check:
    rng = random.Random(seed)
    chk = Check("boundary trichotomy probes")
    for t in range(instances):
        sqp, m = probe_instance(rng)
        report = boundary_probe(sqp, m, [probe_node(rng, sqp, m) for _ in range(nodes)])
        bad = len(report.violations)
        chk.passed += report.probes - bad
        chk.total += report.probes
        chk.failures += [f"instance {t}: {v}" for v in report.violations][: max(0, 5 - len(chk.failures))]
    return chk


def check_example51(seed: int, trials: int) -> Check:
    rng = random.Random(seed)
    chk = Check("example 5.1 closure equals beta1 = 0 and det(b1|a_star) = 0")
    for t in range(trials):
        jet = example51_jet(rng)
        b, s = jet.b[0], jet.a_star
        expected = jet.beta[0] == 0 and b[0] * s[1] - b[1] * s[0] == 0
        chk.record(in_closure(jet) == expected, f"sample {t}")
    return chk


# ---------------------------------------------------------------------------
# suites

SUITES = ("codes", "qp", "transforms", "boundary")


def run_suite(name: str, seed: int, trials: int) -> list[Check]:
    if name == "codes":
        return [check_code_oracle(seed, trials), check_closure(seed, trials),
                check_perturbation(seed, max(trials // 5, 0) if trials else 0)]
    if name == "qp":
        return [check_qp_oracle(seed, trials), check_normal_form(seed, trials)]
    if name == "transforms":
        k = max(trials // 10, 0) if trials else 0
        return [check_commutation(seed, k), check_sp2mf(seed, trials), check_mf2sp(seed, k),
                check_phi(seed, k, 4 if trials else 0), check_composition(seed, k)]
    if name == "boundary":
        return [check_boundary(seed, max(trials // 10, 0) if trials else 0, 5)]
    raise ValueError(f"unknown suite {name!r}")


def run_report(suite: str, seed: int, trials: int) -> tuple[str, bool]:
    names = SUITES if suite == "all" else (suite,)
    lines = [f"seed={seed} trials={trials}"]
    ok = True
    for name in names:
        checks = run_suite(name, seed, trials)
        suite_ok = all(c.ok for c in checks)
        ok = ok and suite_ok
        passed = sum(c.passed for c in checks)
        total = sum(c.total for c in checks)
        lines.append(f"[{name}] {'PASS' if suite_ok else 'FAIL'} {passed}/{total}")
        for c in checks:
            lines.append("  " + c.line())
            for f in c.failures:
                lines.append(f"    - {f}")
    lines.append("RESULT " + ("PASS" if ok else "FAIL"))
    return "\n".join(lines) + "\n", ok
