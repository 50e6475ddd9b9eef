"""Parameter-grid tracing, Newton correction and the boundary probe.

Special quadratic instances are traced exactly (rational grid nodes and the
exact QP).  General polynomial problems go through a float Newton corrector on
indexed KKT systems; converged points are rationalised and, where needed,
snapped before the exact code engine runs.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .codes import compute_code
from .core import CombinatorialCode, JetPoint, Poly, PolyProblem, grad_x, to_rational, to_vector
from .jets import SqpInstance
from .qp import alpha_boundary, full_parameters, stationary_map

SP_INTERIOR = "sp_interior"
MF_BOUNDARY = "mf_boundary"
INFEASIBLE = "infeasible"
NON_STATIONARY = "non_stationary"
CLASSES = (SP_INTERIOR, MF_BOUNDARY, INFEASIBLE, NON_STATIONARY)

RESIDUAL_TOL = 1e-10
ACTIVITY_TOL = 1e-8
COND_LIMIT = 1e12
MAX_NEWTON = 50
RATIONAL_DENOM = 10**6


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class GridSpec:
    """Axes ``{index: (min, max, steps)}`` and fixed values ``{index: value}``.

    Indices are 0-based parameter positions; together they must cover
    ``0..p-1`` exactly once.
    """

    axes: dict
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        axes = {}
        for k, (lo, hi, steps) in self.axes.items():
            lo, hi, steps = to_rational(lo), to_rational(hi), int(steps)
            if steps < 1:
                raise ValueError(f"axis {k}: steps must be at least 1")
            if lo > hi:
                raise ValueError(f"axis {k}: min exceeds max")
            axes[int(k)] = (lo, hi, steps)
        fixed = {int(k): to_rational(v) for k, v in self.fixed.items()}
        overlap = set(axes) & set(fixed)
        if overlap:
            raise ValueError(f"parameters {sorted(overlap)} are both gridded and fixed")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "fixed", fixed)

    @property
    def p(self) -> int:
        return len(self.axes) + len(self.fixed)

    def check(self, p: int):
        if set(self.axes) | set(self.fixed) != set(range(p)):
            raise ValueError(f"grid must assign all {p} parameters exactly once")

    def axis_values(self, k: int) -> list[Fraction]:
        lo, hi, steps = self.axes[k]
        if steps == 1:
            return [lo]
        h = (hi - lo) / (steps - 1)
        return [lo + t * h for t in range(steps)]

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.axes[k][2] for k in sorted(self.axes))

    def nodes(self) -> list[tuple[tuple[int, ...], tuple[Fraction, ...]]]:
        """``(grid index, y)`` in lexicographic order of the grid index."""
        keys = sorted(self.axes)
        values = [self.axis_values(k) for k in keys]
        p = self.p
        out = []
        for idx in itertools.product(*(range(len(v)) for v in values)):
            y = [Fraction(0)] * p
            for k, v in self.fixed.items():
                y[k] = v
            for k, vals, t in zip(keys, values, idx):
                y[k] = vals[t]
            out.append((idx, tuple(y)))
        return out


# ---------------------------------------------------------------------------
# records


@dataclass(frozen=True)
class TraceRecord:
    y: tuple
    x: tuple | None
    code: CombinatorialCode | None
    classification: str
    index: tuple = ()

    @property
    def feasible(self) -> bool:
        return self.classification != INFEASIBLE

    @property
    def stationary(self) -> bool:
        return self.code is not None and self.feasible and self.code.is_stationary

    @property
    def mfcq_violated(self) -> bool:
        return self.code is not None and self.feasible and self.code.mfcq_violated

    def to_json(self) -> dict:
        return {
            "index": list(self.index),
            "y": [str(v) for v in self.y],
            "x": None if self.x is None else [str(v) for v in self.x],
            "feasible": self.feasible,
            "stationary": self.stationary,
            "mfcq_violated": self.mfcq_violated,
            "classification": self.classification,
            "code": None if self.code is None else self.code.to_json(),
        }


def classify(code: CombinatorialCode | None, feasible: bool) -> str:
    if not feasible or code is None or not code.feasible:
        return INFEASIBLE
    if code.mfcq_violated:
        return MF_BOUNDARY
    if code.is_stationary:
        return SP_INTERIOR
    return NON_STATIONARY


def trace_grid(sqp: SqpInstance, grid: GridSpec) -> list[TraceRecord]:
    """Exact stationary point and code at every grid node."""
    grid.check(sqp.p)
    records = []
    for idx, y in grid.nodes():
        sp = stationary_map(sqp, y)
        if sp.x is None:
            records.append(TraceRecord(y, None, None, INFEASIBLE, idx))
        else:
            records.append(TraceRecord(y, sp.x, sp.code, classify(sp.code, True), idx))
    return records


# ---------------------------------------------------------------------------
# Newton correction


class NewtonFailure(RuntimeError):
    def __init__(self, reason: str, cond: float = math.inf, iterations: int = 0):
        super().__init__(f"{reason} (cond={cond:.3g}, iterations={iterations})")
        self.reason = reason
        self.cond = cond
        self.iterations = iterations


@dataclass(frozen=True)
class NewtonResult:
    x: tuple[float, ...]
    mu: dict
    lam: dict
    residual: float
    cond: float
    iterations: int


class _FloatPoly:
    __slots__ = ("coef", "xe", "ye")

    def __init__(self, q: Poly):
        terms = q.sorted_terms()
        self.coef = [float(c) for _, c in terms]
        self.xe = [xe for (xe, _), _ in terms]
        self.ye = [ye for (_, ye), _ in terms]

    def __call__(self, x, y) -> float:
        total = 0.0
        for c, xe, ye in zip(self.coef, self.xe, self.ye):
            t = c
            for v, e in zip(x, xe):
                if e:
                    t *= v ** e
            for v, e in zip(y, ye):
                if e:
                    t *= v ** e
            total += t
        return total


class _KktSystem:
    """``grad f + sum mu_i grad g_i + sum lam_j grad h_j = 0, g_I = 0, h_J = 0``."""

    def __init__(self, prob: PolyProblem, I: Sequence[int], J: Sequence[int]):
        self.n = prob.size.n
        self.I, self.J = list(I), list(J)
        funcs = [prob.f] + [prob.g[i - 1] for i in self.I] + [prob.h[j - 1] for j in self.J]
        self.vals = [_FloatPoly(q) for q in funcs[1:]]
        self.grads = [[_FloatPoly(d) for d in grad_x(q)] for q in funcs]
        self.hess = [[[_FloatPoly(d.diff_x(l)) for l in range(self.n)] for d in grad_x(q)]
                     for q in funcs]

    @property
    def size(self) -> int:
        return self.n + len(self.I) + len(self.J)

    def evaluate(self, z, y):
        n = self.n
        x = z[:n]
        weights = np.concatenate(([1.0], z[n:]))
        G = np.array([[d(x, y) for d in gr] for gr in self.grads])  # (1+k, n)
        H = np.zeros((n, n))
        for w, hq in zip(weights, self.hess):
            if w:
                H += w * np.array([[d(x, y) for d in row] for row in hq])
        F = np.concatenate((weights @ G, [v(x, y) for v in self.vals]))
        k = len(self.vals)
        Jac = np.zeros((n + k, n + k))
        Jac[:n, :n] = H
        Jac[:n, n:] = G[1:].T
        Jac[n:, :n] = G[1:]
        return F, Jac


def _cond(Jac) -> float:
    if Jac.size == 0:
        return 1.0
    with np.errstate(all="ignore"):
        c = float(np.linalg.cond(Jac))
    return c if math.isfinite(c) else math.inf


def newton_correct(prob: PolyProblem, I: Sequence[int], J: Sequence[int], seed_x: Sequence,
                   seed_multipliers: Sequence | None, y: Sequence) -> NewtonResult:
    """Newton iteration on the indexed KKT system in ``(x, mu_I, lambda_J)``.

    Raises :class:`NewtonFailure` when the Jacobian's condition number exceeds
    ``COND_LIMIT`` or when ``MAX_NEWTON`` iterations do not bring the residual
    below ``RESIDUAL_TOL``.
    """
    system = _KktSystem(prob, sorted(I), sorted(J))
    k = len(system.I) + len(system.J)
    mult = [0.0] * k if seed_multipliers is None else [float(v) for v in seed_multipliers]
    if len(mult) != k or len(seed_x) != system.n:
        raise ValueError("seed has the wrong dimension")
    z = np.array([float(v) for v in seed_x] + mult)
    yf = [float(v) for v in y]
    cond = math.inf
    for it in range(MAX_NEWTON + 1):
        F, Jac = system.evaluate(z, yf)
        cond = _cond(Jac)
        if cond > COND_LIMIT:
            raise NewtonFailure("singular Jacobian", cond, it)
        res = float(np.max(np.abs(F))) if F.size else 0.0
        if res < RESIDUAL_TOL:
            n = system.n
            mu = {i: float(v) for i, v in zip(system.I, z[n:n + len(system.I)])}
            lam = {j: float(v) for j, v in zip(system.J, z[n + len(system.I):])}
            return NewtonResult(tuple(float(v) for v in z[:n]), mu, lam, res, cond, it)
        if it == MAX_NEWTON:
            break
        z = z - np.linalg.solve(Jac, F)
        if not np.all(np.isfinite(z)):
            raise NewtonFailure("divergence", cond, it)
    raise NewtonFailure("no convergence", cond, MAX_NEWTON)


def estimate_multipliers(prob: PolyProblem, I, J, x, y) -> list[float]:
    """Least-squares multipliers for ``(I, J)`` at ``x``."""
    xs, ys = [to_rational(v) for v in x], [to_rational(v) for v in y]

    def grad(q):
        return [float(d(xs, ys)) for d in grad_x(q)]

    cols = [grad(prob.g[i - 1]) for i in sorted(I)] + [grad(prob.h[j - 1]) for j in sorted(J)]
    if not cols:
        return []
    A = np.array(cols).T
    rhs = -np.array(grad(prob.f))
    sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    return [float(v) for v in sol]


@dataclass(frozen=True)
class ContinuationResult:
    points: list  # (y, x or None, status)
    breakdown: tuple | None
    reason: str | None
    cond_limit: float = COND_LIMIT

    @property
    def completed(self) -> bool:
        return self.breakdown is None


def continuation_path(prob: PolyProblem, I: Sequence[int], J: Sequence[int],
                      start: tuple[Sequence, Sequence], path: Sequence[Sequence]) -> ContinuationResult:
    """Follow the indexed KKT solution along ``path``; stop at the first failure."""
    x0, y0 = start
    mult = estimate_multipliers(prob, I, J, x0, y0)
    x = [float(v) for v in x0]
    points = []
    for y in path:
        y = tuple(y)
        try:
            r = newton_correct(prob, I, J, x, mult, y)
        except NewtonFailure as exc:
            points.append((y, None, exc.reason))
            return ContinuationResult(points, y, exc.reason)
        x = list(r.x)
        mult = [r.mu[i] for i in sorted(I)] + [r.lam[j] for j in sorted(J)]
        points.append((y, r.x, "ok"))
    return ContinuationResult(points, None, None)


# ---------------------------------------------------------------------------
# general problems


def _rationalise(v: float) -> Fraction:
    if abs(v) < ACTIVITY_TOL:
        return Fraction(0)
    return Fraction(v).limit_denominator(RATIONAL_DENOM)


def snapped_jet(prob: PolyProblem, x: Sequence, y: Sequence) -> JetPoint:
    """Exact jet at the rationalised point, values within tolerance set to 0."""
    from .jets import jet_sp

    jet = jet_sp(prob, x, y)

    def snap(v):
        return Fraction(0) if abs(v) < ACTIVITY_TOL else v

    return JetPoint(jet.a, [snap(v) for v in jet.alpha], jet.b, [snap(v) for v in jet.beta],
                    jet.a_star, n=jet.n)


def _candidate_pairs(size):
    ineq = range(1, size.m_le + 1)
    eq = list(range(1, size.m_eq + 1))
    out = []
    for kj in range(len(eq), -1, -1):
        for J in itertools.combinations(eq, kj):
            for ki in range(size.m_le + 1):
                for I in itertools.combinations(ineq, ki):
                    out.append((I, J))
    return out


def stationary_point(prob: PolyProblem, y: Sequence, seeds: Sequence[Sequence]):
    """First stationary point found by Newton over candidate pairs and seeds.

    Returns ``(x, code, classification)``; ``x`` is ``None`` when no
    candidate converged to a feasible point.
    """
    y = to_vector(y)
    fallback = None
    for seed in seeds:
        for I, J in _candidate_pairs(prob.size):
            try:
                r = newton_correct(prob, I, J, seed, None, y)
            except NewtonFailure:
                continue
            except np.linalg.LinAlgError:
                continue
            x = tuple(_rationalise(v) for v in r.x)
            jet = snapped_jet(prob, x, y)
            code = compute_code(jet)
            if not code.feasible:
                continue
            if code.is_stationary:
                return x, code, classify(code, True)
            if fallback is None:
                fallback = (x, code, classify(code, True))
    if fallback is not None:
        return fallback
    return None, None, INFEASIBLE


def trace_problem(prob: PolyProblem, grid: GridSpec,
                  seeds: Sequence[Sequence] = ()) -> list[TraceRecord]:
    """Newton-based trace; each node is seeded with the previous node's point."""
    grid.check(prob.size.p)
    base_seeds = [tuple(s) for s in seeds] or [(0.0,) * prob.size.n, (1.0,) * prob.size.n]
    records = []
    prev = None
    for idx, y in grid.nodes():
        tries = ([prev] if prev is not None else []) + base_seeds
        x, code, cls = stationary_point(prob, y, tries)
        if x is not None:
            prev = tuple(float(v) for v in x)
        records.append(TraceRecord(y, x, code, cls, idx))
    return records


# ---------------------------------------------------------------------------
# boundary probe


@dataclass(frozen=True)
class ProbeRecord:
    y_prime: tuple
    boundary: Fraction
    below: CombinatorialCode | None
    at: CombinatorialCode | None
    above: CombinatorialCode | None


@dataclass
class ProbeReport:
    m: int
    records: list = field(default_factory=list)
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def probes(self) -> int:
        return 3 * len(self.records)


def sp_star_condition(code: CombinatorialCode, m: int) -> bool:
    """``m`` active and some pair of the code avoids ``m``."""
    return m in code.i0 and any(m not in I for I, _ in code.pairs)


def boundary_probe(sqp: SqpInstance, m: int, y_prime_nodes: Sequence[Sequence]) -> ProbeReport:
    """Check the inactive / boundary / active trichotomy around ``alpha_m = A``."""
    if not 1 <= m <= sqp.size.m_le:
        raise IndexError(f"inequality label {m} out of range")
    report = ProbeReport(m)
    for yp in y_prime_nodes:
        yp = to_vector(yp)
        A = alpha_boundary(sqp, yp, m)
        codes = []
        for delta in (-1, 0, 1):
            sp = stationary_map(sqp, full_parameters(sqp, yp, m, A + delta))
            codes.append(sp.code)
        below, at, above = codes
        report.records.append(ProbeRecord(yp, A, below, at, above))
        label = f"y'={[str(v) for v in yp]} A={A}"
        if below is None or not below.is_stationary or m in below.i0:
            report.violations.append(f"{label}: alpha_m=A-1 should leave {m} inactive")
        if at is None or not at.is_stationary or not sp_star_condition(at, m):
            report.violations.append(f"{label}: alpha_m=A should give the boundary code")
        if above is None or not above.is_stationary or m not in above.i0:
            report.violations.append(f"{label}: alpha_m=A+1 should make {m} active")
    return report


# ---------------------------------------------------------------------------
# export


def _columns(records: Sequence[TraceRecord]):
    p = len(records[0].y) if records else 0
    n = next((len(r.x) for r in records if r.x is not None), 0)
    return p, n


def export_trace(records: Sequence[TraceRecord], fmt: str,
                 projection: tuple[int, int] | None = None, p: int | None = None,
                 n: int | None = None) -> bytes:
    """Serialise a trace as ``csv``, ``json`` or ``svg``.

    ``projection`` indexes the concatenated vector ``(y, x)``.  ``p`` and
    ``n`` fix the column layout for empty traces.
    """
    rp, rn = _columns(records)
    p = rp if p is None else p
    n = rn if n is None else n
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"y{k + 1}" for k in range(p)] + [f"x{k + 1}" for k in range(n)]
                   + ["feasible", "stationary", "mfcq_violated", "classification"])
        for r in records:
            xs = [str(v) for v in r.x] if r.x is not None else [""] * n
            w.writerow([str(v) for v in r.y] + xs + [
                str(r.feasible).lower(), str(r.stationary).lower(),
                str(r.mfcq_violated).lower(), r.classification])
        return buf.getvalue().encode()
    if fmt == "json":
        doc = {"p": p, "n": n, "records": [r.to_json() for r in records]}
        return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode()
    if fmt == "svg":
        if projection is None:
            raise ValueError("svg export needs a projection")
        return _svg(records, projection, p, n).encode()
    raise ValueError(f"unknown format {fmt!r}")


_SVG_STYLE = {
    SP_INTERIOR: "#1f77b4",
    MF_BOUNDARY: "#d62728",
    INFEASIBLE: "#bbbbbb",
    NON_STATIONARY: "#2ca02c",
}


def _svg(records, projection, p, n) -> str:
    i, j = projection
    dim = p + n
    if not (0 <= i < dim and 0 <= j < dim) or i == j:
        raise ValueError(f"projection {projection} invalid for {dim} coordinates")

    def coord(r, k):
        if k < p:
            return r.y[k]
        return None if r.x is None else r.x[k - p]

    pts = []
    for r in records:
        u, v = coord(r, i), coord(r, j)
        if u is not None and v is not None:
            pts.append((float(u), float(v), r.classification))
    size, pad = 800, 40
    if pts:
        ux = [q[0] for q in pts]
        vy = [q[1] for q in pts]
        u0, u1 = min(ux), max(ux)
        v0, v1 = min(vy), max(vy)
    else:
        u0 = v0 = 0.0
        u1 = v1 = 1.0
    du = (u1 - u0) or 1.0
    dv = (v1 - v0) or 1.0
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {size} {size}" '
        f'width="{size}" height="{size}">',
        "<style>" + " ".join(f".{k}{{fill:{c}}}" for k, c in _SVG_STYLE.items()) + "</style>",
        f'<rect x="{pad}" y="{pad}" width="{size - 2 * pad}" height="{size - 2 * pad}" '
        'fill="none" stroke="#000"/>',
        f'<g id="points" data-axes="{i},{j}">',
    ]
    span = size - 2 * pad
    for u, v, cls in pts:
        px = pad + (u - u0) / du * span
        py = size - pad - (v - v0) / dv * span
        lines.append(f'<circle class="{cls}" cx="{px:.2f}" cy="{py:.2f}" r="4"/>')
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
