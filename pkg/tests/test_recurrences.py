from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cusptaylor.cmdata import DISCRIMINANTS, registry
from cusptaylor.recurrences import (COEFFS_AT_I, QRPoly, QuadPoly, bseq, cm_qseq, cm_qseq_mod, expand_p_form,
                                    expand_q_form, k00_link_holds, pseq, qseq_omega, theta_action)

P_AT_ZERO = [1, 0, -12, 0, 216, 0, 10368, 0, -2052864, 0, 47029248, 0]
Q_AT_ZERO = [1, 0, 0, 48, 0, 0, 18432, 0, 0, 13271040, 0, 0, 1974730752, 0, 0]


def test_sequences_at_zero():
    assert [int(pseq(n).constant().a) for n in range(12)] == P_AT_ZERO
    assert [int(qseq_omega(n).constant().a) for n in range(15)] == Q_AT_ZERO


def test_first_terms():
    assert pseq(0) == QuadPoly([1])
    assert pseq(1).is_zero()
    assert pseq(2) == QuadPoly([-12])
    assert pseq(3) == QuadPoly([0, 48])
    assert COEFFS_AT_I.first(3) == [pseq(0), pseq(1), pseq(2)]
    assert COEFFS_AT_I.nth(7) == pseq(7)


def test_b_polys_small():
    Q, R = QRPoly.Q(), QRPoly.R()
    assert bseq(0) == QRPoly.const(1)
    assert bseq(1) == QRPoly()
    assert bseq(2) == Q.scale(-12)
    assert bseq(3) == R.scale(48)
    assert bseq(4) == (Q * Q).scale(216)
    assert bseq(5) == (Q * R).scale(-4608)
    assert bseq(6) == (Q * Q * Q).scale(1152 * 9) + (R * R).scale(1152 * 16)
    with pytest.raises(ValueError):
        bseq(-1)


@pytest.mark.parametrize("n", range(2, 20))
def test_b_polys_homogeneous_integral(n):
    b = bseq(n)
    assert b.is_homogeneous(2 * n)
    assert b.is_integral()


@pytest.mark.parametrize("n", range(0, 16))
def test_b_specialisations_match_sequences(n):
    # B_n(1, 0) = p_n(0) and B_n(0, 1) = q_n(0): two independent routes
    b = bseq(n)
    assert b.evaluate(Fraction(1), Fraction(0)) == int(pseq(n).constant().a)
    assert b.evaluate(Fraction(0), Fraction(1)) == int(qseq_omega(n).constant().a)


@pytest.mark.parametrize("n", range(0, 14))
def test_expanded_forms_are_b_polys(n):
    assert expand_p_form(pseq(n), n) == bseq(n)
    assert expand_q_form(qseq_omega(n), n) == bseq(n)


def test_theta_rejects_inhomogeneous():
    with pytest.raises(ValueError):
        theta_action(QRPoly.Q() + QRPoly.R())


@given(st.integers(0, 6), st.integers(0, 6), st.integers(-50, 50))
def test_theta_keeps_weight(a, b, c):
    p = QRPoly({(a, b): c})
    w = 6 * a + 4 * b
    out = theta_action(p, w)
    assert out == QRPoly() or out.is_homogeneous(w + 2)


def test_theta_leibniz():
    Q, R = QRPoly.Q(), QRPoly.R()
    lhs = theta_action(Q * R)
    rhs = theta_action(Q) * R + Q * theta_action(R)
    assert lhs == rhs


@pytest.mark.parametrize("D", [D for D in DISCRIMINANTS if D < -4])
def test_k00_link(D):
    spec = registry(D)
    assert all(k00_link_holds(spec, n) for n in range(0, 9))


@pytest.mark.parametrize("D", DISCRIMINANTS)
@pytest.mark.parametrize("l", [5, 7, 11])
def test_mod_stream_matches_reduction(D, l):
    spec = registry(D)
    mods = cm_qseq_mod(spec, l, 30)
    assert all(mods[n] == cm_qseq(spec, n).reduce(l) for n in range(len(mods)))


def test_quadpoly_arithmetic():
    p = QuadPoly([1, 2, 3])
    assert (p * p).int_coeffs() == [1, 4, 10, 12, 9]
    assert p.derivative() == QuadPoly([2, 6])
    assert (p - p).is_zero()
