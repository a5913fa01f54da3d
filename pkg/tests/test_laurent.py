from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from abcwalk import linalg
from abcwalk.laurent import (
    LaurentPoly,
    PolyParseError,
    UndefinedSpanError,
    edp_check,
    format_poly,
    lp_add,
    lp_eval_matrix,
    lp_mul,
    norm_stats,
    parse_poly,
)

P = parse_poly


def polys(max_len=6, max_coeff=20, lo=-4, hi=4):
    return st.builds(
        lambda cs, low: LaurentPoly(cs, low),
        st.lists(st.integers(-max_coeff, max_coeff), max_size=max_len),
        st.integers(lo, hi),
    )


nonzero = polys().filter(bool)


def test_add_examples():
    assert lp_add(P("t^2-3*t+1"), P("3*t")) == P("t^2+1")
    p = P("2*t^-1-3+2*t")
    assert lp_add(p, LaurentPoly()) == p
    assert lp_add(P("2-t"), P("t-2")) == LaurentPoly()
    assert not lp_add(P("2-t"), P("t-2"))


def test_mul_examples():
    assert lp_mul(P("2-t"), P("2+t")) == P("4-t^2")
    assert lp_mul(P("t^-1"), P("t^2-3*t+1")) == P("t-3+t^-1")
    assert lp_mul(P("x^2-3*x+1"), P("x^2+1")) == P("x^4-3*x^3+2*x^2-3*x+1")


def test_mul_matches_numpy_convolution():
    a, b = P("3*t^3-t+7"), P("-2*t^2+5*t+1")
    ref = np.polymul([3, 0, -1, 7], [-2, 5, 1])[::-1]
    assert (a * b).coeffs == tuple(int(c) for c in ref)


def test_norm_stats_examples():
    s = norm_stats(P("t^2-3*t+1"))
    assert (s.length, s.K, s.m, s.M, s.d) == (5, 3, 0, 2, 2)
    s = norm_stats(LaurentPoly())
    assert (s.length, s.K, s.m, s.M, s.d) == (0, 0, None, None, None)
    s = norm_stats(P("2*t^-1-3+2*t"))
    assert (s.length, s.K, s.m, s.M, s.d) == (7, 3, -1, 1, 2)


def test_zero_span_is_undefined():
    with pytest.raises(UndefinedSpanError):
        LaurentPoly().min_degree
    with pytest.raises(UndefinedSpanError):
        LaurentPoly().diameter


@pytest.mark.parametrize("text, holds, delta, r", [
    ("t^2-3*t+1", True, 2, Fraction(1, 3)),
    ("t^2-2*t+1", False, 2, Fraction(1, 2)),
    ("x^4-3*x^2+1", True, 2, Fraction(1, 3)),
    ("2-t", True, 1, Fraction(1, 2)),
])
def test_edp_named(text, holds, delta, r):
    rep = edp_check(P(text))
    assert rep.holds is holds
    assert rep.delta == delta
    assert rep.r == r
    assert rep.contraction == delta * r


def test_edp_sol_anchor():
    rep = edp_check(P("t^2-3*t+1"))
    assert (rep.y0, rep.i0, rep.contraction) == (-3, 1, Fraction(2, 3))


def test_edp_monomial_and_ties():
    rep = edp_check(P("5*t^3"))
    assert rep.holds and rep.r == 0 and rep.i0 == 3
    # equal magnitudes -> smallest degree wins; second max counted with multiplicity
    rep = edp_check(P("2*t^2+2*t-2"))
    assert rep.i0 == 0 and rep.r == 1 and not rep.holds


def test_edp_zero_rejected():
    with pytest.raises(ValueError):
        edp_check(LaurentPoly())


def test_eval_matrix_examples():
    A = ((2, 1), (1, 1))
    assert lp_eval_matrix(P("1"), A) == linalg.identity(2)
    assert lp_eval_matrix(P("t"), A) == A
    assert lp_eval_matrix(P("t^2-3*t+1"), A) == linalg.zeros(2)
    # t^-1 gives the exact inverse
    assert lp_eval_matrix(P("t^-1"), A) == ((1, -1), (-1, 2))


def test_call_evaluates_exactly():
    p = P("t^-2+3*t-1")
    assert p(2) == Fraction(1, 4) + 6 - 1
    assert P("t^2-3*t+1")(Fraction(1, 2)) == Fraction(-1, 4)


@pytest.mark.parametrize("text", ["t^-2+3*t-1", "0", "-7", "t", "-t^5+t^-5", "2*t^2-t"])
def test_text_round_trip(text):
    p = P(text)
    assert P(format_poly(p)) == p
    assert format_poly(P(format_poly(p))) == format_poly(p)


def test_parser_forms():
    assert P("3t") == P("3*t")
    assert P("t^(-2)") == P("t^-2")
    assert P(" 1 - t ") == P("-t+1")
    assert P("x^2") == P("t^2")


@pytest.mark.parametrize("text", ["", "t^", "3**t", "t^2t", "1+", "t^x", "2 3"])
def test_parser_errors_carry_position(text):
    with pytest.raises(PolyParseError) as ei:
        P(text)
    assert 0 <= ei.value.pos <= len(text)


@given(polys(), polys(), polys())
def test_ring_axioms(p, q, r):
    assert (p + q) + r == p + (q + r)
    assert (p * q) * r == p * (q * r)
    assert p + q == q + p
    assert p * q == q * p
    assert p * (q + r) == p * q + p * r
    assert p - p == LaurentPoly()


@given(nonzero, nonzero)
def test_norm_submultiplicative_and_diameter_additive(p, q):
    pq = p * q
    assert pq.length <= p.length * q.length
    assert pq.diameter == p.diameter + q.diameter


@given(polys())
def test_format_parse_round_trip(p):
    assert P(format_poly(p)) == p


@given(nonzero, st.sampled_from([1, -1]), st.integers(-6, 6))
def test_edp_invariant_under_unit_and_shift(y, c, k):
    a, b = edp_check(y), edp_check(LaurentPoly.monomial(c, k) * y)
    assert a.holds == b.holds
    assert a.contraction == b.contraction


@given(nonzero, st.integers(2, 9))
def test_edp_under_scaling_recomputed(y, c):
    # scaling every coefficient by c multiplies delta by c and leaves r fixed
    a, b = edp_check(y), edp_check(LaurentPoly.constant(c) * y)
    assert b.delta == c * a.delta
    assert b.r == a.r
    assert b.contraction == c * a.contraction
    assert b.holds == (c * a.contraction < 1)


SMALL = polys(max_len=4, max_coeff=5, lo=-2, hi=2)


@given(SMALL, SMALL)
def test_eval_matrix_is_ring_homomorphism(p, q):
    A = ((2, 1), (1, 1))
    ev = lambda f: lp_eval_matrix(f, A)
    assert ev(p + q) == linalg.add(ev(p), ev(q))
    assert ev(p * q) == linalg.matmul(ev(p), ev(q))


@given(SMALL)
def test_eval_matrix_rational_inverse(p):
    A = ((2,),)
    assert lp_eval_matrix(p, A)[0][0] == p(Fraction(2))
