import csv
import io
import json
import random
import re
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stratpoint.codes import compute_code, is_stationary
from stratpoint.core import ProblemSize, make_pair
from stratpoint.jets import SqpInstance, jet_sp
from stratpoint.problems import BUILTINS
from stratpoint.qp import solve_qp, stationary_map
from stratpoint.suites import probe_instance, probe_node, random_sqp, random_sqp_params
from stratpoint.tracer import (
    COND_LIMIT,
    INFEASIBLE,
    MF_BOUNDARY,
    NON_STATIONARY,
    SP_INTERIOR,
    GridSpec,
    NewtonFailure,
    TraceRecord,
    boundary_probe,
    classify,
    continuation_path,
    export_trace,
    newton_correct,
    trace_grid,
    trace_problem,
)

EX51 = BUILTINS["example-5.1"].obj
HALFSPACE = BUILTINS["halfspace-qp"].obj
SCALAR = SqpInstance(ProblemSize(1, 1, 0), [1])  # parameters (a1, alpha1)


def ex51_grid(steps=5):
    return GridSpec({0: (-1, 1, steps), 2: (-1, 1, steps)}, {1: 0})


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec({0: (0, 1, 0)})
    with pytest.raises(ValueError):
        GridSpec({0: (1, 0, 3)})
    with pytest.raises(ValueError):
        GridSpec({0: (0, 1, 3)}, {0: 1})
    with pytest.raises(ValueError):
        GridSpec({0: (0, 1, 3)}).check(2)
    g = GridSpec({1: (0, 1, 3)}, {0: 5})
    assert g.shape == (3,)
    assert [y for _, y in g.nodes()] == [(5, 0), (5, Fraction(1, 2)), (5, 1)]


def test_trace_scalar_example():
    recs = trace_grid(SCALAR, GridSpec({1: (-2, 1, 4)}, {0: 1}))
    assert [r.x for r in recs] == [(1,), (1,), (0,), (-1,)]
    assert [1 in r.code.i0 for r in recs] == [False, True, True, True]
    assert all(r.classification == SP_INTERIOR for r in recs)


def test_trace_infeasible_region():
    two = SqpInstance(ProblemSize(1, 2, 0), [0])  # (a1, alpha1, a2, alpha2)
    recs = trace_grid(two, GridSpec({3: (-2, 2, 5)}, {0: 1, 1: 1, 2: -1}))
    # x <= -1 and x >= alpha2; at alpha2 = -1 the feasible set is a single point
    cls = [r.classification for r in recs]
    assert cls[:2] == [SP_INTERIOR, MF_BOUNDARY]
    assert cls[2:] == [INFEASIBLE] * 3
    assert all(r.x is None and not r.feasible for r in recs[2:])


def test_trace_unconstrained():
    sqp = SqpInstance(ProblemSize(2, 0, 0), [3, -1])
    recs = trace_grid(sqp, GridSpec({}))
    assert len(recs) == 1 and all(r.x == (3, -1) and r.classification == SP_INTERIOR for r in recs)


def test_single_step_grid():
    assert len(trace_grid(SCALAR, GridSpec({0: (1, 1, 1), 1: (0, 5, 1)}))) == 1


def test_classification_table():
    sp = compute_code(jet_sp(HALFSPACE, (0, 0)))
    mf = compute_code(jet_sp(EX51, (0, 0), (0, 0, 0)))
    plain = compute_code(jet_sp(HALFSPACE, (-1, 0)))
    assert classify(sp, True) == SP_INTERIOR
    assert classify(mf, True) == MF_BOUNDARY
    assert classify(plain, True) == NON_STATIONARY
    assert classify(None, False) == INFEASIBLE


def test_newton_halfspace():
    r = newton_correct(HALFSPACE, [1], [], (0.1, 0.0), None, ())
    assert max(abs(v) for v in r.x) < 1e-12
    assert abs(r.mu[1] - 2) < 1e-10 and r.residual < 1e-10


def test_newton_example_51():
    r = newton_correct(EX51, [], [1], (0.9, 0.1), None, (1, 0, -1))
    assert abs(r.x[0] - 1) < 1e-10 and abs(r.x[1]) < 1e-10
    assert abs(r.lam[1] + 2) < 1e-10


def test_newton_singular_at_vertex():
    with pytest.raises(NewtonFailure) as info:
        newton_correct(EX51, [], [1], (0.0, 0.0), None, (0, 0, 0))
    assert info.value.reason == "singular Jacobian" and info.value.cond > COND_LIMIT


def test_newton_seed_dimension():
    with pytest.raises(ValueError):
        newton_correct(HALFSPACE, [1], [], (0.1,), None, ())


def test_continuation_closed_form():
    ts = [Fraction(k, 10) for k in range(-10, 11)]
    res = continuation_path(EX51, [], [1], ((1, 0), (1, 0, -1)), [(1, 0, t) for t in ts])
    assert res.completed
    for (y, x, status), t in zip(res.points, ts):
        assert status == "ok"
        assert abs(x[0] + float(t)) < 1e-9 and abs(x[1]) < 1e-9


def test_continuation_breakdown_near_vertex():
    path = [(Fraction(1, 2) ** k, 0, 0) for k in range(0, 60)]
    res = continuation_path(EX51, [], [1], ((0, 0), (1, 0, 0)), path)
    assert not res.completed and res.reason == "singular Jacobian"
    assert 0 < res.breakdown[0] < Fraction(1, 100)
    assert all(s == "ok" for _, _, s in res.points[:-1])


def test_continuation_constant_path():
    res = continuation_path(HALFSPACE, [1], [], ((0, 0), ()), [()] * 5)
    assert res.completed and len({p[1] for p in res.points}) == 1


def test_boundary_probe_scalar():
    rep = boundary_probe(SCALAR, 1, [[1]])
    assert rep.ok and rep.probes == 3
    rec = rep.records[0]
    assert rec.boundary == -1
    assert 1 not in rec.below.i0
    # a_star vanishes at x = c, so ({m*}, {}) is the only minimal pair
    assert 1 in rec.at.i0 and rec.at.pairs == {make_pair({2})}
    assert rec.above.pairs == {make_pair({1, 2})}


def test_boundary_probe_degenerate_gradient():
    rep = boundary_probe(SCALAR, 1, [[0]])
    assert rep.records[0].boundary == 0


def test_boundary_probe_random_instance():
    rng = random.Random(3)
    sqp, m = probe_instance(rng, max_n=2)
    while sqp.size.n != 2:
        sqp, m = probe_instance(rng, max_n=2)
    rep = boundary_probe(sqp, m, [probe_node(rng, sqp, m) for _ in range(25)])
    assert rep.ok and rep.probes == 75


def test_boundary_probe_label_check():
    with pytest.raises(IndexError):
        boundary_probe(SCALAR, 2, [[1]])


def test_boundary_sweep_shape():
    # alpha_m >= A iff m active; alpha_m = A iff the boundary code condition holds
    rng = random.Random(8)
    for _ in range(5):
        sqp, m = probe_instance(rng)
        yp = probe_node(rng, sqp, m)
        A = boundary_probe(sqp, m, [yp]).records[0].boundary
        from stratpoint.qp import full_parameters
        from stratpoint.tracer import sp_star_condition

        for d in range(-3, 4):
            code = stationary_map(sqp, full_parameters(sqp, yp, m, A + Fraction(d, 2))).code
            assert (m in code.i0) == (d >= 0)
            assert sp_star_condition(code, m) == (d == 0)


def _four_records():
    return trace_grid(SCALAR, GridSpec({1: (-2, 1, 4)}, {0: 1}))


def test_export_csv():
    data = export_trace(_four_records(), "csv").decode()
    rows = list(csv.reader(io.StringIO(data)))
    assert rows[0] == ["y1", "y2", "x1", "feasible", "stationary", "mfcq_violated", "classification"]
    assert len(rows) == 5
    assert rows[3] == ["1", "0", "0", "true", "true", "false", "sp_interior"]


def test_export_empty():
    data = export_trace([], "csv", p=2, n=1).decode()
    assert data.count("\n") == 1
    svg = export_trace([], "svg", (0, 1), p=2, n=1).decode()
    assert "<circle" not in svg and 'viewBox="0 0 800 800"' in svg


def test_export_json():
    doc = json.loads(export_trace(_four_records(), "json"))
    assert doc["p"] == 2 and doc["n"] == 1 and len(doc["records"]) == 4
    rec = doc["records"][0]
    assert set(rec) >= {"y", "x", "code", "classification", "feasible", "stationary", "mfcq_violated"}


def test_export_errors():
    with pytest.raises(ValueError):
        export_trace(_four_records(), "svg", (0, 5))
    with pytest.raises(ValueError):
        export_trace(_four_records(), "svg")
    with pytest.raises(ValueError):
        export_trace(_four_records(), "png")


def test_example_51_svg():
    recs = trace_problem(EX51, ex51_grid())
    svg = export_trace(recs, "svg", (0, 2)).decode()
    circles = re.findall(r'<circle class="(\w+)" cx="([\d.]+)" cy="([\d.]+)"', svg)
    assert len(circles) == len(recs)
    mf = [c for c in circles if c[0] == MF_BOUNDARY]
    assert len(mf) == 1 and float(mf[0][1]) == 400.0
    # the whole line y1 = 0 sits in the middle column and carries no sp record
    assert all(c[0] != SP_INTERIOR for c in circles if float(c[1]) == 400.0)
    # off the line y1 = 0 the trace is the graph sheet x = (-y3/y1, 0)
    for r in recs:
        if r.y[0] != 0:
            assert r.classification == SP_INTERIOR and r.x == (-r.y[2] / r.y[0], 0)
        elif r.y[2] != 0:
            assert r.classification == INFEASIBLE


def _consistent(r: TraceRecord):
    if r.classification == SP_INTERIOR:
        return r.stationary and not r.mfcq_violated
    if r.classification == MF_BOUNDARY:
        return bool(r.code.mf_pairs)
    return True


def test_consistency_on_traces():
    for r in trace_problem(EX51, ex51_grid(7)):
        assert _consistent(r)
        if r.classification == SP_INTERIOR:
            assert is_stationary(jet_sp(EX51, r.x, r.y))


seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_consistency_on_random_sqp_traces(seed):
    rng = random.Random(seed)
    sqp = random_sqp(rng, max_n=2, max_le=2)
    if sqp.p == 0:
        return
    y0 = random_sqp_params(rng, sqp)
    k = rng.randrange(sqp.p)
    fixed = {i: v for i, v in enumerate(y0) if i != k}
    for r in trace_grid(sqp, GridSpec({k: (-2, 2, 5)}, fixed)):
        assert _consistent(r)
        if r.classification == SP_INTERIOR:
            assert is_stationary(sqp.jet(r.x, r.y))


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_newton_agrees_with_exact_qp(seed):
    rng = random.Random(seed)
    sqp = random_sqp(rng, max_eq=0)
    y = random_sqp_params(rng, sqp)
    sp = stationary_map(sqp, y)
    if sp.x is None:
        return
    seed_x = [float(v) + 0.01 for v in sp.x]
    try:
        r = newton_correct(sqp.to_problem(), sorted(sp.code.i0), [], seed_x, None, y)
    except NewtonFailure:
        return  # degenerate active set: outside the nondegenerate region
    assert max(abs(a - float(b)) for a, b in zip(r.x, sp.x)) < 1e-9


def test_newton_agrees_on_some_instances():
    # the property above must not be vacuous
    rng = random.Random(0)
    hits = 0
    for _ in range(100):
        sqp = random_sqp(rng, max_eq=0)
        y = random_sqp_params(rng, sqp)
        sp = stationary_map(sqp, y)
        if sp.x is None:
            continue
        try:
            r = newton_correct(sqp.to_problem(), sorted(sp.code.i0), [], [float(v) + 0.01 for v in sp.x], None, y)
        except NewtonFailure:
            continue
        hits += max(abs(a - float(b)) for a, b in zip(r.x, sp.x)) < 1e-9
    assert hits >= 30


def test_continuity_proxy():
    def xs(steps):
        recs = trace_grid(SCALAR, GridSpec({1: (-3, 3, steps)}, {0: 1}))
        assert all(r.classification == SP_INTERIOR for r in recs)
        return [r.x[0] for r in recs], Fraction(6, steps - 1)

    fine, hf = xs(61)
    L = 2 * max(abs(b - a) / hf for a, b in zip(fine, fine[1:]))
    coarse, h = xs(13)
    assert all(abs(b - a) <= L * h for a, b in zip(coarse, coarse[1:]))


def test_continuity_proxy_flags_jumps():
    # a jump in the sequence breaks the bound built from a smooth refinement
    fine = [Fraction(k, 10) for k in range(11)]
    L = 2 * max(abs(b - a) / Fraction(1, 10) for a, b in zip(fine, fine[1:]))
    jumpy = [0, Fraction(1, 2), 3]
    assert not all(abs(b - a) <= L * Fraction(1, 2) for a, b in zip(jumpy, jumpy[1:]))


def test_example_51_two_sheets_at_vertex():
    vertex = compute_code(jet_sp(EX51, (0, 0), (0, 0, 0)))
    assert vertex.sp_pairs and vertex.mf_pairs
    # graph sheet: y = (s, 0, -s*u) gives x = (u, 0); as s -> 0 it reaches (u, 0) at y = 0
    for u in (Fraction(-1), Fraction(1, 2), Fraction(2)):
        for k in range(1, 6):
            s = Fraction(1, 10**k)
            y = (s, 0, -s * u)
            assert stationary_map_free(y) == (u, 0)
            assert is_stationary(jet_sp(EX51, (u, 0), y))
        # limit point sits on the flat sheet y = 0 of feasible x's, where MFCQ fails
        limit = compute_code(jet_sp(EX51, (u, 0), (0, 0, 0)))
        assert limit.feasible and limit.mfcq_violated and not limit.is_stationary
    # the flat sheet is two-dimensional in x and the graph sheet is two-dimensional in y
    assert compute_code(jet_sp(EX51, (1, 1), (0, 0, 0))).mfcq_violated


def stationary_map_free(y):
    y1, y2, y3 = y
    r = y1 * y1 + y2 * y2
    return (-y3 * y1 / r, -y3 * y2 / r)


def test_trace_problem_reaches_vertex():
    recs = trace_problem(EX51, ex51_grid())
    origin = [r for r in recs if r.y == (0, 0, 0)][0]
    assert origin.classification == MF_BOUNDARY
    assert origin.code.sp_pairs and origin.code.mf_pairs


def test_trace_problem_deterministic():
    a = export_trace(trace_problem(EX51, ex51_grid()), "json")
    b = export_trace(trace_problem(EX51, ex51_grid()), "json")
    assert a == b


def test_solve_qp_matches_scalar_trace():
    for r in _four_records():
        alpha = r.y[1]
        assert solve_qp([1], [[1]], [alpha]).x_star == r.x
