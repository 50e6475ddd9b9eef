import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stratpoint import linalg
from stratpoint.codes import compute_code
from stratpoint.core import JetPoint, Poly, PolyProblem, ProblemSize, make_pair
from stratpoint.jets import (
    SqpInstance,
    build_normal_form,
    jet_mf,
    jet_sp,
    normal_form_jacobian,
    param_index,
    point_code,
    restrict_parameters,
)
from stratpoint.problems import BUILTINS
from stratpoint.qp import stationary_map
from stratpoint.suites import random_jet

EX51 = BUILTINS["example-5.1"].obj
HALFSPACE = BUILTINS["halfspace-qp"].obj


def test_jet_sp_example_51():
    jet = jet_sp(EX51, (0, 0), (0, 0, 0))
    assert jet.b == ((0, 0),) and jet.beta == (0,) and jet.a_star == (0, 0)
    jet = jet_sp(EX51, (1, 0), (1, 0, -1))
    assert jet.b == ((1, 0),) and jet.beta == (0,) and jet.a_star == (2, 0)
    with pytest.raises(ValueError):
        jet_sp(EX51, (1, 0), (1, 0))


def test_constant_data_jet_is_constant():
    n, p = 2, 1
    prob = PolyProblem(ProblemSize(n, 1, 0, p), Poly.constant(n, p, 2), (Poly.constant(n, p, -1),), ())
    assert jet_sp(prob, (0, 0), (0,)) == jet_sp(prob, (3, -5), (7,))


def test_jet_mf_is_projection():
    jet = jet_mf(EX51, (0, 0), (0, 0, 0))
    assert jet.a_star is None and jet.b == ((0, 0),) and jet.beta == (0,)
    x = Poly.x(2, 0, 0)
    prob = PolyProblem(ProblemSize(2, 2, 0, 0), Poly.constant(2, 0, 0), (x, -x), ())
    jet = jet_mf(prob, (0, 0))
    assert jet.a == ((1, 0), (-1, 0)) and jet.alpha == (0, 0)
    full = jet_sp(EX51, (1, 2), (3, 4, 5))
    assert jet_mf(EX51, (1, 2), (3, 4, 5)) == full.without_objective()


def test_point_code_examples():
    pc = point_code(EX51, (0, 0), (0, 0, 0))
    assert pc.feasible and pc.code.sp_pairs and pc.code.mf_pairs
    pc = point_code(HALFSPACE, (0, 0))
    assert pc.stationary and pc.code.pairs == {make_pair({1, 2})}
    pc = point_code(HALFSPACE, (-1, 0))
    assert pc.feasible and pc.code.pairs == frozenset() and not pc.stationary


def test_point_code_reports_equality_violation():
    pc = point_code(EX51, (0, 0), (0, 0, 1))
    assert not pc.feasible and not pc.stationary


def test_point_code_agrees_with_code_of_jet():
    for x, y in [((0, 0), (0, 0, 0)), ((1, 0), (1, 0, -1)), ((2, 1), (0, 1, -1))]:
        assert point_code(EX51, x, y).code == compute_code(jet_sp(EX51, x, y))


def test_normal_form_examples():
    jet = JetPoint([(1, 0)], [0], (), (), (0, 1))
    nf = build_normal_form(jet)
    assert nf.sqp.c == (0, -1)
    assert nf.y_bar == (1, 0, 0)
    assert nf.round_trip_ok

    vertex = jet_sp(EX51, (0, 0), (0, 0, 0))
    nf = build_normal_form(vertex)
    assert (nf.sqp.size.n, nf.sqp.size.m_le, nf.sqp.size.m_eq, nf.sqp.p) == (2, 0, 1, 3)
    assert nf.round_trip_ok

    zero = JetPoint([(0, 0)], [0], [(0, 0)], [0], (0, 0))
    nf = build_normal_form(zero)
    assert nf.sqp.c == (0, 0) and all(v == 0 for v in nf.y_bar)


def test_normal_form_needs_objective():
    with pytest.raises(ValueError):
        build_normal_form(JetPoint([(1,)], [0], (), (), None))


def test_jacobian_small_case_is_triangular():
    rows, det = normal_form_jacobian(JetPoint([(3,)], [-2], (), (), (5,)))
    assert len(rows) == 3 and abs(det) == 1
    assert all(rows[r][c] == 0 for r in range(3) for c in range(r))
    assert all(rows[k][k] == 1 for k in range(3))


def test_jacobian_zero_jet():
    rows, det = normal_form_jacobian(JetPoint([(0, 0)], [0], [(0, 0)], [0], (0, 0)))
    assert abs(det) == 1
    assert all(rows[r][c] == 0 for r in range(len(rows)) for c in range(r))


seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_round_trip_and_unit_determinant(seed):
    jet = random_jet(random.Random(seed), max_n=3, max_le=3, max_eq=2)
    nf = build_normal_form(jet)
    assert jet_sp(nf.sqp.to_problem(), [0] * jet.n, nf.y_bar) == jet
    assert nf.sqp.jet([0] * jet.n, nf.y_bar) == jet
    _, det = normal_form_jacobian(jet)
    assert abs(det) == 1


def test_normal_form_of_stationary_point_keeps_code():
    pc = point_code(HALFSPACE, (0, 0))
    nf = build_normal_form(pc.jet)
    sp = stationary_map(nf.sqp, nf.y_bar)
    assert sp.x == (0, 0) and sp.code == pc.code


def test_param_index_layout():
    size = ProblemSize(2, 2, 1)
    assert param_index(size, "a", 1, 0) == 0
    assert param_index(size, "alpha", 1) == 2
    assert param_index(size, "alpha", 2) == 5
    assert param_index(size, "b", 1, 1) == 7
    assert param_index(size, "beta", 1) == 8
    with pytest.raises(IndexError):
        param_index(size, "alpha", 3)


def test_restriction_identity_is_canonical():
    sqp = SqpInstance(ProblemSize(1, 1, 0), [1])
    eye = [[1, 0], [0, 1]]
    r = restrict_parameters(sqp, [0, 0], eye)
    for y in [(1, -2), (1, 1), (-1, 0), (0, 3)]:
        assert stationary_map(r, y) == stationary_map(sqp, y)


def test_restriction_along_alpha_translates_constraint():
    sqp = SqpInstance(ProblemSize(2, 1, 0), [1, 0])
    line = restrict_parameters(sqp, [1, 0, 0], [[0], [0], [1]])
    assert line.p == 1
    assert line.constraints([Fraction(-1, 2)]).alpha == (Fraction(-1, 2),)
    assert stationary_map(line, [Fraction(-1, 2)]).x == (Fraction(1, 2), 0)
    assert stationary_map(line, [-2]).x == (1, 0)


def test_restriction_rank_check():
    sqp = SqpInstance(ProblemSize(1, 1, 0), [1])
    with pytest.raises(ValueError):
        restrict_parameters(sqp, [0, 0], [[1, 2], [2, 4]])


def test_plane_through_example_51_normal_form_changes_code():
    nf = build_normal_form(jet_sp(EX51, (0, 0), (0, 0, 0)))
    # vary b_1 along its first coordinate and beta_1; the second coordinate stays 0
    plane = restrict_parameters(nf.sqp, nf.y_bar, [[1, 0], [0, 0], [0, 1]])
    codes = {}
    for s in (-1, 0, 1):
        sp = stationary_map(plane, [s, 0])
        codes[s] = sp.code
    assert codes[0].mfcq_violated
    assert codes[1].is_stationary and not codes[1].mfcq_violated
    assert codes[-1] == codes[1]


def test_affine_instance_dimension_checks():
    with pytest.raises(ValueError):
        SqpInstance(ProblemSize(1, 1, 0), [1, 2])
    with pytest.raises(ValueError):
        SqpInstance(ProblemSize(1, 1, 0), [1], [0, 0], None)
    sqp = SqpInstance(ProblemSize(1, 1, 0), [1])
    with pytest.raises(ValueError):
        sqp.constraints([1])


def test_sqp_problem_objective_is_half_distance():
    sqp = SqpInstance(ProblemSize(2, 0, 0), [1, -1])
    prob = sqp.to_problem()
    assert prob.f((3, 1)) == Fraction(1, 2) * (4 + 4)
    assert linalg.det([[1, 0], [0, 1]]) == 1
