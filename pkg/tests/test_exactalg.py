import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cusptaylor.exactalg import (QSQRT2, QSQRT5, RATIONAL, FieldSpec, QuadElt, ResidueElt, TruncPoly,
                                 ideal_is_whole, invert, is_unit, mult_order, quad_add, quad_mul,
                                 trunc_derivative, trunc_mul)

FIELDS = [RATIONAL, QSQRT2, QSQRT5]
PRIMES = [3, 5, 7, 11, 13, 17, 23]
ints = st.integers(-10 ** 30, 10 ** 30)


@st.composite
def quad_triples(draw):
    f = draw(st.sampled_from(FIELDS))
    b = (lambda: 0) if f.is_rational else (lambda: draw(ints))
    return f, [QuadElt(draw(ints), b(), f) for _ in range(3)]


@st.composite
def residue_triples(draw):
    f = draw(st.sampled_from(FIELDS))
    l = draw(st.sampled_from(PRIMES))
    r = st.integers(0, l - 1)
    return [ResidueElt(draw(r), 0 if f.is_rational else draw(r), l, f) for _ in range(3)]


@st.composite
def trunc_triples(draw):
    f = draw(st.sampled_from(FIELDS))
    l = draw(st.sampled_from(PRIMES))
    r = st.lists(st.integers(0, l - 1), min_size=l, max_size=l)
    out = []
    for _ in range(3):
        a = draw(r)
        b = [0] * l if f.is_rational else draw(r)
        out.append(TruncPoly(np.array([a, b]), l, f))
    return out


def test_field_spec():
    assert FieldSpec(5).name == "Q(sqrt5)"
    with pytest.raises(ValueError):
        FieldSpec(8)


def test_quad_examples():
    one = QuadElt(1, 0, QSQRT5)
    assert quad_mul(one, one) == one
    assert quad_mul(QuadElt(13, 30, QSQRT5), QuadElt(70, 21, QSQRT5)) == QuadElt(4060, 2373, QSQRT5)
    assert quad_mul(QuadElt(0, 1, QSQRT2), QuadElt(0, 1, QSQRT2)) == QuadElt(2, 0, QSQRT2)
    assert quad_add(QuadElt(1, 2, QSQRT2), QuadElt(3, 4, QSQRT2)) == QuadElt(4, 6, QSQRT2)
    with pytest.raises(ValueError):
        quad_mul(QuadElt(1, 1, QSQRT2), QuadElt(1, 1, QSQRT5))
    with pytest.raises(ValueError):
        QuadElt(1, 1, RATIONAL)


@given(quad_triples())
def test_quad_ring_axioms(data):
    f, (x, y, z) = data
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert x * y == y * x
    assert (x * y).norm() == x.norm() * y.norm()


@given(residue_triples())
def test_residue_ring_axioms(data):
    x, y, z = data
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert x + (-x) == ResidueElt(0, 0, x.l, x.field)


@given(quad_triples(), st.sampled_from(PRIMES))
def test_reduction_commutes(data, l):
    f, (x, y, _) = data
    assert (x * y).reduce(l) == x.reduce(l) * y.reduce(l)
    assert (x + y).reduce(l) == x.reduce(l) + y.reduce(l)


def test_residue_ring_isomorphism_exhaustive():
    # Z[sqrt5] -> Z/7[sqrt5]: products of representatives reduce to products of residues
    l, f = 7, QSQRT5
    elems = [(a, b) for a in range(l) for b in range(l)]
    for (a, b), (c, e) in itertools.product(elems, elems):
        exact = QuadElt(a, b, f) * QuadElt(c, e, f)
        assert exact.reduce(l) == ResidueElt(a, b, l, f) * ResidueElt(c, e, l, f)


@given(trunc_triples())
def test_trunc_ring_axioms(data):
    p, q, r = data
    assert trunc_mul(trunc_mul(p, q), r) == trunc_mul(p, trunc_mul(q, r))
    assert trunc_mul(p, q + r) == trunc_mul(p, q) + trunc_mul(p, r)
    assert trunc_mul(p, TruncPoly.one(p.l, p.field)) == p


@given(trunc_triples())
def test_derivative_is_derivation(data):
    p, q, _ = data
    lhs = trunc_derivative(trunc_mul(p, q))
    rhs = trunc_mul(trunc_derivative(p), q) + trunc_mul(p, trunc_derivative(q))
    assert lhs == rhs


def test_trunc_examples():
    l = 5
    t = TruncPoly.monomial(1, l)
    assert trunc_mul(TruncPoly.monomial(l - 1, l), t).is_zero()
    assert trunc_mul(TruncPoly([3, 3], l), TruncPoly([1, 2], l)) == TruncPoly([3, 4, 1], l)
    assert trunc_derivative(TruncPoly([3], l)).is_zero()
    assert trunc_derivative(TruncPoly([0, 3, 0, 2], l)) == TruncPoly([3, 0, 1], l)
    top = trunc_derivative(TruncPoly.monomial(l - 1, l))
    assert top == TruncPoly.monomial(l - 2, l) * (l - 1)
    assert top.coeffs[:, l - 1].sum() == 0
    with pytest.raises(ValueError):
        trunc_mul(TruncPoly([1], 5), TruncPoly([1], 7))


def test_mult_order_examples():
    assert mult_order(ResidueElt(8, 0, 23)) == 11
    assert mult_order(ResidueElt(2, 0, 17)) == 8
    assert mult_order(ResidueElt(13, 10, 17, QSQRT5)) == 144
    assert mult_order(ResidueElt(11, 57, 83, QSQRT5)) == 3444
    assert mult_order(ResidueElt.one(7)) == 1
    with pytest.raises(ValueError):
        mult_order(ResidueElt(0, 1, 5, QSQRT5))


@given(residue_triples())
def test_order_is_least(data):
    u = data[0]
    if not u.is_unit():
        return
    e = mult_order(u)
    assert (u ** e).is_one()
    assert all(not (u ** k).is_one() for k in range(1, e) if e % k == 0)


def test_inverse():
    assert invert(ResidueElt(2, 0, 5)) == ResidueElt(3, 0, 5)
    assert not is_unit(ResidueElt(0, 1, 5, QSQRT5))
    with pytest.raises(ZeroDivisionError):
        invert(ResidueElt(0, 1, 5, QSQRT5))
    u = ResidueElt(13, 10, 17, QSQRT5)
    assert (u * invert(u)).is_one()


def test_ideal_is_whole():
    f = QSQRT5
    assert ideal_is_whole([ResidueElt(1, 0, 7, f)])
    # sqrt5 generates a proper ideal mod 5 (5 ramifies)
    assert not ideal_is_whole([ResidueElt(0, 1, 5, f)])
    assert not ideal_is_whole([ResidueElt(0, 0, 7)])


def test_canonical_hash():
    p = TruncPoly([7, -1, 12], 5)
    q = TruncPoly([2, 4, 2], 5)
    assert p == q and hash(p) == hash(q) and p.key() == q.key()
