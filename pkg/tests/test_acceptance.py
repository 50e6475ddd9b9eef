"""Acceptance criteria 1-10, each run at its stated size and tolerance.

Every test prints one ``criterion N: PASS|FAIL ...`` line; the lines are also
collected into the terminal summary.
"""

import io
import time
from collections import deque
from contextlib import redirect_stdout
from fractions import Fraction

from conftest import CRITERIA_LINES
from stratpoint.cli import main
from stratpoint.codes import compute_code
from stratpoint.jets import jet_sp
from stratpoint.problems import BUILTINS, halfspace_pair_sqp
from stratpoint.suites import (
    check_boundary,
    check_closure,
    check_code_oracle,
    check_example51,
    check_mf2sp,
    check_normal_form,
    check_perturbation,
    check_qp_oracle,
    check_sp2mf,
)
from stratpoint.tracer import MF_BOUNDARY, SP_INTERIOR, GridSpec, continuation_path, trace_grid

SEED = 20240601


def report(k: int, ok: bool, detail: str):
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'} {detail}"
    print(line)
    CRITERIA_LINES.append(line)
    return ok


def test_criterion_1_code_oracle():
    start = time.perf_counter()
    chk = check_code_oracle(SEED, 500)
    elapsed = time.perf_counter() - start
    ok = chk.total == 500 and chk.ok and elapsed < 120
    assert report(1, ok, f"{chk.passed}/{chk.total} oracle agreements in {elapsed:.1f}s"), chk.failures


def test_criterion_2_closure_identity():
    chk = check_closure(SEED, 500, 500)
    ok = chk.total == 1000 and chk.ok
    assert report(2, ok, f"{chk.passed}/{chk.total} jets agree"), chk.failures


def test_criterion_3_perturbation():
    chk = check_perturbation(SEED, 100)
    ok = chk.total == 600 and chk.ok
    assert report(3, ok, f"{chk.passed}/{chk.total} perturbed jets stationary"), chk.failures


def test_criterion_4_qp_oracle():
    chk = check_qp_oracle(SEED, 200)
    ok = chk.total == 200 and chk.ok
    assert report(4, ok, f"{chk.passed}/{chk.total} exact minimiser matches, zero residual"), chk.failures


def test_criterion_5_normal_form():
    chk = check_normal_form(SEED, 100)
    ok = chk.total == 100 and chk.ok
    assert report(5, ok, f"{chk.passed}/{chk.total} round trips with det = +-1"), chk.failures


def test_criterion_6_correspondences():
    a = check_sp2mf(SEED, 100)
    b = check_mf2sp(SEED, 20)
    ok = a.total == 100 and a.ok and b.ok and b.total > 0
    detail = f"sp2mf {a.passed}/{a.total}, mf2sp {b.passed}/{b.total} grid points"
    assert report(6, ok, detail), a.failures + b.failures


def test_criterion_7_boundary_trichotomy():
    chk = check_boundary(SEED, 50, 25)
    ok = chk.total == 50 * 25 * 3 and chk.ok
    assert report(7, ok, f"{chk.passed}/{chk.total} probes"), chk.failures


def _components(nodes):
    nodes = set(nodes)
    seen, count = set(), 0
    for start in nodes:
        if start in seen:
            continue
        count += 1
        queue = deque([start])
        seen.add(start)
        while queue:
            i, j = queue.popleft()
            for nb in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)):
                if nb in nodes and nb not in seen:
                    seen.add(nb)
                    queue.append(nb)
    return count


def test_criterion_8_manifold_with_boundary_shadow():
    # halfspace constraint x1 <= 0 doubled into a slab: a1 = (1, 0), a2 = (-1, 0)
    recs = trace_grid(halfspace_pair_sqp(), GridSpec({0: (-1, 1, 41), 1: (-1, 1, 41)}))
    by_index = {r.index: r for r in recs}
    sp = {r.index for r in recs if r.classification == SP_INTERIOR}
    mf = {r.index for r in recs if r.classification == MF_BOUNDARY}
    closure = sp | mf

    def neighbours(ix):
        i, j = ix
        return [nb for nb in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)) if nb in by_index]

    connected = bool(sp) and _components(sp) == 1 and _components(closure) == 1
    frontier = bool(mf) and all(
        any(nb in sp for nb in neighbours(ix)) and any(nb not in closure for nb in neighbours(ix))
        for ix in mf)
    clean = not any(by_index[ix].mfcq_violated for ix in sp)
    ok = len(recs) == 41 * 41 and connected and frontier and clean
    detail = (f"{len(sp)} sp nodes in {_components(sp)} component, {len(mf)} mf frontier nodes, "
              f"frontier={frontier}, sp without MFCQ violation={clean}")
    assert report(8, ok, detail)


def test_criterion_9_example_51():
    chk = check_example51(SEED, 10_000)
    prob = BUILTINS["example-5.1"].obj
    vertex = compute_code(jet_sp(prob, (0, 0), (0, 0, 0)))
    both = bool(vertex.sp_pairs) and bool(vertex.mf_pairs)
    path = [(Fraction(1, 2) ** k, 0, 0) for k in range(60)]
    cont = continuation_path(prob, [], [1], ((0, 0), (1, 0, 0)), path)
    breakdown = not cont.completed and cont.breakdown[0] > 0
    ok = chk.total == 10_000 and chk.ok and both and breakdown
    where = f"y1={float(cont.breakdown[0]):.3g}" if cont.breakdown else "none"
    detail = (f"{chk.passed}/{chk.total} closure verdicts, vertex SP and MF pairs={both}, "
              f"continuation breakdown at {where} ({cont.reason})")
    assert report(9, ok, detail), chk.failures


def _verify_output(seed):
    buf = io.StringIO()
    with redirect_stdout(buf):
        rc = main(["verify", "--seed", str(seed)])
    return rc, buf.getvalue()


def test_criterion_10_determinism():
    rc1, first = _verify_output(42)
    rc2, second = _verify_output(42)
    ok = first == second and rc1 == rc2 == 0 and first.endswith("RESULT PASS\n")
    assert report(10, ok, f"two verify --seed 42 runs identical ({len(first)} bytes, exit {rc1})")
