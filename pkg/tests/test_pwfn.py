from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dense_grid
from thinflow.pwfn import (
    INF,
    PiecewiseConstantFn,
    PiecewiseLinearFn,
    as_rational,
    compose_monotone,
    evaluate,
    format_rational,
    integrate,
    min_pointwise,
    positive_part,
)

rationals = st.fractions(min_value=-20, max_value=20, max_denominator=12)
small_pos = st.fractions(min_value=0, max_value=5, max_denominator=6)


@st.composite
def step_fns(draw, nonneg=False):
    k = draw(st.integers(0, 5))
    bps = sorted(set(draw(st.lists(rationals, min_size=k, max_size=k))))
    vals = draw(st.lists(small_pos if nonneg else rationals, min_size=len(bps), max_size=len(bps)))
    return PiecewiseConstantFn(bps, vals, 0)


@st.composite
def pl_fns(draw, monotone=False):
    k = draw(st.integers(1, 5))
    bps = sorted(set(draw(st.lists(rationals, min_size=k, max_size=k))))
    if monotone:
        steps = draw(st.lists(small_pos, min_size=len(bps), max_size=len(bps)))
        vals, acc = [], draw(rationals)
        for s in steps:
            acc += s
            vals.append(acc)
        left, right = draw(small_pos), draw(small_pos)
    else:
        vals = draw(st.lists(rationals, min_size=len(bps), max_size=len(bps)))
        left, right = draw(rationals), draw(rationals)
    return PiecewiseLinearFn(bps, vals, left, right)


def sample_points(*fns):
    pts = set(dense_grid(-25, 25, 3))
    for f in fns:
        for b in f.breakpoints:
            pts |= {b, b - F(1, 97), b + F(1, 97)}
    return sorted(pts)


# --------------------------------------------------------------------- rationals


def test_rational_parsing():
    assert as_rational("3/6") == F(1, 2)
    assert as_rational("-4") == -4
    assert format_rational(F(6, 3)) == "2"
    assert format_rational(F(-1, 3)) == "-1/3"
    with pytest.raises(ValueError):
        as_rational("1/0")
    with pytest.raises(ValueError):
        as_rational("one")
    with pytest.raises(TypeError):
        as_rational(0.5)
    with pytest.raises(TypeError):
        as_rational(True)


# --------------------------------------------------------------------- eval


def test_eval_step_is_right_continuous():
    u = PiecewiseConstantFn.from_pieces([(0, 2), (1, 0), (2, 1)])
    assert evaluate(u, 1) == 0
    assert evaluate(u, F(999, 1000)) == 2
    assert evaluate(u, -1) == 0
    assert evaluate(u, 2) == 1


def test_eval_linear_interpolation():
    f = PiecewiseLinearFn([0, 1], [1, 3])
    assert evaluate(f, F(1, 2)) == 2


def test_eval_zero():
    assert evaluate(PiecewiseLinearFn.zero(), 7) == 0
    assert evaluate(PiecewiseConstantFn.zero(), 7) == 0


def test_step_canonical_form_merges_equal_values():
    f = PiecewiseConstantFn([0, 1, 2, 3], [1, 1, 2, 2])
    assert f.breakpoints == (0, 2)
    with pytest.raises(ValueError):
        PiecewiseConstantFn([1, 0], [1, 2])


def test_linear_canonical_form_drops_collinear_points():
    f = PiecewiseLinearFn([0, 1, 2], [0, 1, 2], 1, 1)
    assert f == PiecewiseLinearFn.identity()
    g = PiecewiseLinearFn([0, 1, 2], [0, 1, 1], 1, 0)
    assert g.breakpoints == (1,)


# --------------------------------------------------------------------- integrate


def test_integrate_two_route_inflow():
    u = PiecewiseConstantFn.from_pieces([(0, 2), (1, 0), (2, 1)])
    big_u = integrate(u)
    assert (big_u(1), big_u(2), big_u(3)) == (2, 2, 3)
    assert big_u(0) == 0
    assert big_u(-5) == 0


def test_integrate_trivial():
    assert integrate(PiecewiseConstantFn.zero()) == PiecewiseLinearFn.zero()
    three = PiecewiseConstantFn.from_pieces([(0, 3)])
    assert integrate(three)(5) == 15
    assert integrate(three).slope_right == 3


@given(step_fns())
def test_integrate_telescoping(f):
    big = integrate(f)
    assert big(0) == 0
    for a, b in zip(f.breakpoints, f.breakpoints[1:]):
        assert big(b) - big(a) == f(a) * (b - a)


# --------------------------------------------------------------------- compose


def test_compose_shift_of_two_route_label():
    lr = PiecewiseLinearFn([0, 1, 2], [1, 3, 3], 1, 1)
    plus_one = PiecewiseLinearFn.affine(1, 1)
    lt = compose_monotone(plus_one, lr)
    assert lt(1) == 4
    assert lt == PiecewiseLinearFn([0, 1, 2], [2, 4, 4], 1, 1)


def test_compose_identity():
    f = PiecewiseLinearFn([0, 2], [1, 5], 1, 0)
    assert compose_monotone(PiecewiseLinearFn.identity(), f) == f


def test_compose_kink_against_grid():
    g = PiecewiseLinearFn([3], [6], 2, 0)
    f = PiecewiseLinearFn.affine(1, 1)
    h = compose_monotone(g, f)
    assert h(1) == g(2)
    for theta in dense_grid():
        assert h(theta) == g(f(theta))


def test_compose_rejects_decreasing_inner():
    with pytest.raises(ValueError):
        compose_monotone(PiecewiseLinearFn.identity(), PiecewiseLinearFn.affine(-1, 0))


@settings(max_examples=80)
@given(pl_fns(), pl_fns(monotone=True))
def test_compose_matches_pointwise(g, f):
    h = compose_monotone(g, f)
    for theta in sample_points(f, h):
        assert h(theta) == g(f(theta))


@settings(max_examples=60)
@given(pl_fns(monotone=True), pl_fns(monotone=True))
def test_compose_preserves_monotonicity(g, f):
    assert compose_monotone(g, f).is_monotone()


# --------------------------------------------------------------------- min


def test_min_parallel_labels():
    a, b = PiecewiseLinearFn.affine(1, 2), PiecewiseLinearFn.affine(1, 3)
    assert min_pointwise([a, b]) == a


def test_min_single():
    f = PiecewiseLinearFn([0, 1], [0, 5], 0, 1)
    assert min_pointwise([f]) == f


def test_min_crossing():
    m = min_pointwise([PiecewiseLinearFn.affine(2, 0), PiecewiseLinearFn.affine(1, 1)])
    assert m.breakpoints == (1,)
    for theta in dense_grid():
        assert m(theta) == min(2 * theta, theta + 1)


def test_min_empty():
    with pytest.raises(ValueError):
        min_pointwise([])


@settings(max_examples=80)
@given(st.lists(pl_fns(), min_size=1, max_size=4), st.lists(rationals, min_size=1, max_size=30))
def test_min_matches_pointwise(fs, thetas):
    m = min_pointwise(fs)
    for theta in thetas + sample_points(*fs):
        assert m(theta) == min(f(theta) for f in fs)


@settings(max_examples=60)
@given(pl_fns())
def test_positive_part(f):
    p = positive_part(f)
    for theta in sample_points(f, p):
        assert p(theta) == max(F(0), f(theta))


# --------------------------------------------------------------------- algebra


@settings(max_examples=60)
@given(pl_fns(), pl_fns())
def test_linear_sum_and_difference(f, g):
    s, d = f + g, f - g
    for theta in sample_points(f, g):
        assert s(theta) == f(theta) + g(theta)
        assert d(theta) == f(theta) - g(theta)


@settings(max_examples=60)
@given(step_fns(), step_fns())
def test_step_sum(f, g):
    s = f + g
    for theta in sample_points(f, g):
        assert s(theta) == f(theta) + g(theta)


@given(pl_fns(), rationals)
def test_translate(f, d):
    g = f.translate(d)
    for theta in sample_points(f):
        assert g(theta + d) == f(theta)


@given(step_fns(nonneg=True), rationals)
def test_cut(f, at):
    g = f.cut(at)
    for theta in sample_points(f) + [at]:
        assert g(theta) == (f(theta) if theta < at else 0)


def test_pieces_and_support():
    f = PiecewiseConstantFn.from_pieces([(0, 2), (1, 0), (2, 1), (4, 0)])
    assert list(f.pieces()) == [(-INF, 0, 0), (0, 1, 2), (1, 2, 0), (2, 4, 1), (4, INF, 0)]
    assert f.support_end() == 4


def test_zeros_include_rays():
    f = PiecewiseLinearFn([0, 2], [1, -1], 1, -1)
    assert f.zeros() == [-1, 1]


@given(pl_fns())
def test_canonical_form_is_stable(f):
    again = PiecewiseLinearFn(f.breakpoints, f.values, f.slope_left, f.slope_right)
    assert again == f
    assert again.breakpoints == f.breakpoints
    slopes = f.segment_slopes()
    assert len(slopes) == len(f.breakpoints) + 1
    if len(f.breakpoints) > 1 or slopes[0] != slopes[1]:
        assert all(a != b for a, b in zip(slopes, slopes[1:]))
