"""Problem files and built-in examples.

A problem file is JSON.  Polynomials are lists of terms
``{"coeff": "3/7", "x": [exponents], "y": [exponents]}``; coefficients are
fraction or decimal strings (or JSON integers), never binary floats.

Two kinds exist::

    {"kind": "problem", "size": {"n", "m_le", "m_eq", "p"},
     "objective": poly, "inequalities": [poly...], "equalities": [poly...]}

    {"kind": "sqp", "size": {"n", "m_le", "m_eq"}, "c": [...],
     "base": [...], "directions": [[...]...], "y_bar": [...]}

``base``/``directions`` (affine restriction) and ``y_bar`` are optional.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .core import Poly, PolyProblem, ProblemSize, to_rational, validate_problem
from .jets import SqpInstance


class ProblemFileError(ValueError):
    """Malformed problem file; ``where`` is ``line L column C`` or a JSON path."""

    def __init__(self, message: str, where: str = ""):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


# ---------------------------------------------------------------------------
# reading


def _coeff(value, where: str) -> Fraction:
    if isinstance(value, bool) or isinstance(value, float):
        raise ProblemFileError("coefficients must be integers or strings, not floats", where)
    if not isinstance(value, (int, str)):
        raise ProblemFileError("coefficient must be a string or integer", where)
    try:
        return to_rational(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise ProblemFileError(f"bad coefficient {value!r} ({exc})", where) from None


def _exponents(value, length: int, where: str) -> tuple[int, ...]:
    if value is None:
        return (0,) * length
    if not isinstance(value, list) or len(value) != length:
        raise ProblemFileError(f"expected a list of {length} exponents", where)
    if any(isinstance(e, bool) or not isinstance(e, int) or e < 0 for e in value):
        raise ProblemFileError("exponents must be non-negative integers", where)
    return tuple(value)


def _poly(value, n: int, p: int, where: str) -> Poly:
    if not isinstance(value, list):
        raise ProblemFileError("polynomial must be a list of terms", where)
    terms = {}
    for k, t in enumerate(value):
        tw = f"{where}[{k}]"
        if not isinstance(t, dict) or "coeff" not in t:
            raise ProblemFileError("term needs a 'coeff' entry", tw)
        unknown = set(t) - {"coeff", "x", "y"}
        if unknown:
            raise ProblemFileError(f"unknown term keys {sorted(unknown)}", tw)
        key = (_exponents(t.get("x"), n, tw + ".x"), _exponents(t.get("y"), p, tw + ".y"))
        terms[key] = terms.get(key, Fraction(0)) + _coeff(t["coeff"], tw + ".coeff")
    return Poly(n, p, terms)


def _int(doc, key, where, default=None) -> int:
    v = doc.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int) or v < 0:
        raise ProblemFileError(f"'{key}' must be a non-negative integer", f"{where}.{key}")
    return v


def _vector(value, length: int | None, where: str) -> tuple[Fraction, ...]:
    if not isinstance(value, list) or (length is not None and len(value) != length):
        want = f" of length {length}" if length is not None else ""
        raise ProblemFileError(f"expected a list{want}", where)
    return tuple(_coeff(v, f"{where}[{k}]") for k, v in enumerate(value))


@dataclass(frozen=True)
class SqpFile:
    sqp: SqpInstance
    y_bar: tuple | None = None


def from_document(doc) -> PolyProblem | SqpFile:
    if not isinstance(doc, dict):
        raise ProblemFileError("top level must be an object", "$")
    kind = doc.get("kind", "problem")
    size = doc.get("size")
    if not isinstance(size, dict):
        raise ProblemFileError("missing 'size' object", "$.size")
    n = _int(size, "n", "$.size")
    m_le = _int(size, "m_le", "$.size", 0)
    m_eq = _int(size, "m_eq", "$.size", 0)
    if kind == "problem":
        p = _int(size, "p", "$.size", 0)
        f = _poly(doc.get("objective", []), n, p, "$.objective")
        gs, hs = doc.get("inequalities", []), doc.get("equalities", [])
        if not isinstance(gs, list) or len(gs) != m_le:
            raise ProblemFileError(f"expected {m_le} inequalities", "$.inequalities")
        if not isinstance(hs, list) or len(hs) != m_eq:
            raise ProblemFileError(f"expected {m_eq} equalities", "$.equalities")
        g = tuple(_poly(q, n, p, f"$.inequalities[{k}]") for k, q in enumerate(gs))
        h = tuple(_poly(q, n, p, f"$.equalities[{k}]") for k, q in enumerate(hs))
        prob = PolyProblem(ProblemSize(n, m_le, m_eq, p), f, g, h)
        report = validate_problem(prob)
        if not report.ok:
            raise ProblemFileError("; ".join(report.failures), "$")
        return prob
    if kind == "sqp":
        ps = ProblemSize(n, m_le, m_eq)
        c = _vector(doc.get("c"), n, "$.c")
        base = directions = None
        if "base" in doc or "directions" in doc:
            base = _vector(doc.get("base"), ps.mf_jet_dim, "$.base")
            rows = doc.get("directions")
            if not isinstance(rows, list) or len(rows) != ps.mf_jet_dim:
                raise ProblemFileError(f"expected {ps.mf_jet_dim} rows", "$.directions")
            directions = [_vector(r, None, f"$.directions[{k}]") for k, r in enumerate(rows)]
        try:
            sqp = SqpInstance(ps, c, base, directions)
        except ValueError as exc:
            raise ProblemFileError(str(exc), "$") from None
        y_bar = None
        if "y_bar" in doc:
            y_bar = _vector(doc["y_bar"], sqp.p, "$.y_bar")
        return SqpFile(sqp, y_bar)
    raise ProblemFileError(f"unknown kind {kind!r}", "$.kind")


def parse_text(text: str) -> PolyProblem | SqpFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    return from_document(doc)


# ---------------------------------------------------------------------------
# writing


def _poly_doc(q: Poly) -> list:
    return [{"coeff": str(c), "x": list(xe), "y": list(ye)} for (xe, ye), c in q.sorted_terms()]


def to_document(obj: PolyProblem | SqpInstance | SqpFile) -> dict:
    if isinstance(obj, PolyProblem):
        s = obj.size
        return {
            "kind": "problem",
            "size": {"n": s.n, "m_le": s.m_le, "m_eq": s.m_eq, "p": s.p},
            "objective": _poly_doc(obj.f),
            "inequalities": [_poly_doc(g) for g in obj.g],
            "equalities": [_poly_doc(h) for h in obj.h],
        }
    sqp, y_bar = (obj.sqp, obj.y_bar) if isinstance(obj, SqpFile) else (obj, None)
    s = sqp.size
    doc = {
        "kind": "sqp",
        "size": {"n": s.n, "m_le": s.m_le, "m_eq": s.m_eq},
        "c": [str(v) for v in sqp.c],
    }
    if not sqp.canonical:
        doc["base"] = [str(v) for v in sqp.base]
        doc["directions"] = [[str(v) for v in r] for r in sqp.directions]
    if y_bar is not None:
        doc["y_bar"] = [str(v) for v in y_bar]
    return doc


def format_text(obj) -> str:
    return json.dumps(to_document(obj), indent=2) + "\n"


# ---------------------------------------------------------------------------
# built-in examples


@dataclass(frozen=True)
class BuiltinExample:
    name: str
    obj: PolyProblem | SqpFile
    facts: tuple = field(default_factory=tuple)
    x: tuple = ()
    y: tuple = ()


def _example_51() -> PolyProblem:
    n, p = 2, 3
    x = [Poly.x(n, p, k) for k in range(n)]
    y = [Poly.y(n, p, k) for k in range(p)]
    return PolyProblem(ProblemSize(n, 0, 1, p), x[0] ** 2 + x[1] ** 2, (),
                       (x[0] * y[0] + x[1] * y[1] + y[2],))


def _halfspace_qp() -> PolyProblem:
    n = 2
    x = [Poly.x(n, 0, k) for k in range(n)]
    return PolyProblem(ProblemSize(n, 1, 0, 0), (x[0] - 1) ** 2 + x[1] ** 2, (x[0],), ())


def _double_wedge() -> PolyProblem:
    x = Poly.x(1, 0, 0)
    return PolyProblem(ProblemSize(1, 2, 0, 0), Poly.constant(1, 0, 0), (x, -x), ())


def halfspace_pair_sqp() -> SqpInstance:
    """``n = 2``, ``c = (1, 0)``, ``a_1 = (1, 0)``, ``a_2 = (-1, 0)``; parameters ``(alpha_1, alpha_2)``."""
    size = ProblemSize(2, 2, 0)
    base = [1, 0, 0, -1, 0, 0]
    directions = [[0, 0], [0, 0], [1, 0], [0, 0], [0, 0], [0, 1]]
    return SqpInstance(size, [1, 0], base, directions)


BUILTINS = {
    "example-5.1": BuiltinExample(
        "example-5.1", _example_51(),
        ("f = x1^2 + x2^2, h1 = x1*y1 + x2*y2 + y3",
         "x(y) = -y3*(y1, y2)/(y1^2 + y2^2) off the axis y1 = y2 = 0",
         "the origin is stationary and violates MFCQ"),
        (0, 0), (0, 0, 0)),
    "halfspace-qp": BuiltinExample(
        "halfspace-qp", _halfspace_qp(),
        ("f = ||x - (1, 0)||^2, g1 = x1", "x = (0, 0) is stationary with mu_1 = 2"),
        (0, 0), ()),
    "double-wedge": BuiltinExample(
        "double-wedge", _double_wedge(),
        ("g1 = x, g2 = -x", "MFCQ fails exactly at x = 0"),
        (0,), ()),
    "halfspace-sqp": BuiltinExample(
        "halfspace-sqp", SqpFile(SqpInstance(ProblemSize(1, 1, 0), [1])),
        ("f = 1/2 (x - 1)^2, constraint a1*x + alpha1 <= 0",
         "at a1 = 1 the constraint becomes active from alpha1 = -1 on"),
        (1,), (1, -1)),
    "halfspace-pair": BuiltinExample(
        "halfspace-pair", SqpFile(halfspace_pair_sqp()),
        ("feasible iff alpha1 + alpha2 <= 0", "MFCQ fails on alpha1 + alpha2 = 0"),
        (0, 0), (0, 0)),
}


def load(source: str) -> PolyProblem | SqpFile:
    """Built-in name or path to a problem file."""
    if source in BUILTINS:
        return BUILTINS[source].obj
    path = Path(source)
    if not path.exists():
        raise ProblemFileError(f"no such file or built-in example: {source}")
    return parse_text(path.read_text())
