import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cusptaylor.cmdata import DISCRIMINANTS, chowla_selberg, delta_mp, registry
from cusptaylor.exactalg import KElt
from cusptaylor.numerics import (SeriesContext, SeriesRangeError, UpperHalfPoint, automorphy, calE_at_cm,
                                 calE_error_bound, coeff_all_routes, coeff_via_cm_exact,
                                 coeff_via_derivatives, coeff_via_calE, delta_q_coeffs, divisor_sigma,
                                 eval_calE, eval_delta, eval_E2star, eval_E4, eval_E6, mobius,
                                 reduce_to_fundamental, route_error_bounds, tau, tau_by_sigma_recursion)

OMEGA = complex(0.5, math.sqrt(3) / 2)
WIDE = SeriesContext(n_terms=120)
TAU10 = [1, -24, 252, -1472, 4830, -6048, -16744, 84480, -113643, -115920]

reduced_points = st.builds(complex, st.floats(-0.5, 0.5), st.floats(0.87, 3.0)).filter(lambda z: abs(z) >= 1)
sl2 = st.tuples(st.integers(-6, 6), st.integers(-6, 6)).filter(lambda cd: math.gcd(*cd) == 1)


def _complete(c, d):
    # (a b; c d) in SL(2, Z) from a coprime bottom row
    if c == 0:
        return (d, 0, 0, d)
    g, x, y = _egcd(d, -c)
    return (x, -y, c, d) if g == 1 else (-x, y, c, d)


def _egcd(a, b):
    if b == 0:
        return (abs(a), (1 if a >= 0 else -1), 0)
    g, x, y = _egcd(b, a % b)
    return g, y, x - (a // b) * y


def test_tau_values():
    assert [tau(n) for n in range(1, 11)] == TAU10
    assert list(delta_q_coeffs(300)) == tau_by_sigma_recursion(300)


@given(st.integers(1, 60), st.integers(1, 60))
def test_tau_multiplicative(m, n):
    if math.gcd(m, n) == 1:
        assert tau(m * n) == tau(m) * tau(n)


@pytest.mark.parametrize("p", [2, 3, 5, 7, 11, 13, 101, 293])
def test_tau_ramanujan_bound(p):
    assert abs(tau(p)) <= 2 * p ** 5.5


def test_divisor_sigma():
    assert divisor_sigma(1, 12) == 28
    assert divisor_sigma(3, 6) == 1 + 8 + 27 + 216


def test_eisenstein_special_values():
    # E4(i) = 3 Gamma(1/4)^8 / (2 pi)^6, E6(i) = 0, E4(omega) = 0, E2*(i) = E2*(omega) = 0
    e4i = 3 * mpmath.gamma(0.25) ** 8 / (2 * mpmath.pi) ** 6
    assert abs(eval_E4(1j) - float(e4i)) < 1e-13
    assert abs(eval_E6(1j)) < 1e-13
    assert abs(eval_E4(OMEGA)) < 1e-13
    assert abs(eval_E2star(1j)) < 1e-13
    assert abs(eval_E2star(OMEGA)) < 1e-13
    assert abs(eval_delta(1j) - complex(delta_mp(1j))) < 1e-16


def test_series_range_guard():
    with pytest.raises(SeriesRangeError):
        eval_E4(0.01j)
    with pytest.raises(ValueError):
        UpperHalfPoint(0.0, -1.0)


def test_arrays_match_scalars():
    zs = np.array([1j, OMEGA, complex(0.1, 1.4)])
    vals = eval_calE(4, zs)
    assert np.allclose(vals, [eval_calE(4, z) for z in zs], rtol=0, atol=1e-12)


def test_reduction_examples():
    z, g = reduce_to_fundamental(1j + 5)
    assert abs(z - 1j) < 1e-15 and g == (1, -5, 0, 1)
    z, g = reduce_to_fundamental(0.5j)
    assert abs(z - 2j) < 1e-15


@settings(max_examples=40)
@given(st.floats(-3, 3), st.floats(0.05, 2.0))
def test_reduction_delta_identity(x, y):
    w = complex(x, y)
    z, g = reduce_to_fundamental(w)
    assert abs(z.real) <= 0.5 + 1e-12 and abs(z) >= 1 - 1e-12
    assert abs(mobius(g, w) - z) < 1e-9
    # Delta(g w) = j(g, w)^12 Delta(w), with Delta(w) from the mpmath product
    lhs = eval_delta(z)
    rhs = automorphy(g, w) ** 12 * complex(delta_mp(w, 20))
    assert abs(lhs - rhs) <= 1e-9 * abs(lhs)


@settings(max_examples=25)
@given(reduced_points, sl2, st.integers(0, 8))
def test_coefficient_magnitude_invariant(z, cd, m):
    g = _complete(*cd)
    w = mobius(g, z)
    if w.imag < 0.3:
        return
    a = coeff_via_calE(z, m, WIDE)
    b = coeff_via_calE(w, m, WIDE)
    assert abs(abs(a) - abs(b)) <= 1e-8 * abs(a)


@settings(max_examples=40)
@given(reduced_points, st.integers(0, 12))
def test_calE_reflection_symmetry(z, m):
    a = eval_calE(m, -z.conjugate())
    b = eval_calE(m, z)
    assert abs(a - b.conjugate()) <= 1e-9 * max(1.0, abs(b))


@pytest.mark.parametrize("m", range(0, 13))
def test_calE_real_on_boundary(m):
    scale = 12.0 ** m
    for y in np.linspace(0.9, 3.0, 8):
        assert abs(eval_calE(m, complex(0, y)).imag) < 1e-8 * scale
        assert abs(eval_calE(m, complex(-0.5, y)).imag) < 1e-8 * scale
    for th in np.linspace(math.pi / 2, 2 * math.pi / 3, 9)[1:-1]:
        v = np.exp(1j * m * th) * eval_calE(m, np.exp(1j * th))
        assert abs(v.imag) < 1e-8 * scale


def test_calE_exact_at_cm():
    u, v = calE_at_cm(registry(-4), 2)
    assert (u, v) == (KElt.of(-144, u.field), KElt.of(0, u.field))
    u, v = calE_at_cm(registry(-4), 4)
    assert u == KElt.of(31104, u.field) and v == KElt.of(0, v.field)
    u, v = calE_at_cm(registry(-8), 1)
    assert u == KElt.of(0, u.field) and v == KElt.of(6, v.field)
    u, v = calE_at_cm(registry(-8), 2)
    assert u == KElt.of(72, u.field) and v == KElt.of(0, v.field)
    u, v = calE_at_cm(registry(-3), 3)
    assert u == KElt.of(0, u.field) and v == KElt.of(1152, v.field)
    u, v = calE_at_cm(registry(-7), 2)
    assert u == KElt.of(Fraction(144, 7), u.field) and v == KElt.of(0, v.field)


@pytest.mark.parametrize("D", DISCRIMINANTS)
@pytest.mark.parametrize("m", [1, 2, 3, 5])
def test_calE_exact_matches_numeric(D, m):
    spec = registry(D)
    u, v = calE_at_cm(spec, m)
    om = float(chowla_selberg(D))
    exact = (u.to_float() + v.to_float() * abs(D) ** 0.5) * om ** (2 * m)
    num = eval_calE(m, spec.zD)
    assert abs(num - exact) <= 1e-10 * max(1.0, abs(exact)) + calE_error_bound(m, spec.zD)


@pytest.mark.parametrize("D", DISCRIMINANTS)
def test_three_routes_at_cm(D):
    spec = registry(D)
    for m in range(0, 13, spec.elliptic_order):
        out = coeff_all_routes(spec.zD, m, spec)
        assert out["max_rel_disagreement"] < 1e-8


def test_trivial_coefficients():
    ci = [coeff_via_calE(1j, m) for m in range(13)]
    cw = [coeff_via_calE(OMEGA, m) for m in range(13)]
    si, sw = max(map(abs, ci)), max(map(abs, cw))
    assert all(abs(ci[m]) < 1e-10 * si for m in range(1, 13, 2))
    assert all(abs(cw[m]) < 1e-10 * sw for m in range(13) if m % 3)


@settings(max_examples=15)
@given(reduced_points, st.integers(0, 10))
def test_error_bounds_cover_route_gap(z, m):
    a = coeff_via_calE(z, m)
    b = coeff_via_derivatives(z, m)
    ref = coeff_via_derivatives(z, m, n_terms=80, dps=40)
    bounds = route_error_bounds(z, m)
    assert abs(a - ref) <= bounds["theorem"] + 1e-13 * abs(ref)
    assert abs(b - ref) <= bounds["derivative"] + 1e-13 * abs(ref)


def test_cm_route_first_coefficient():
    spec = registry(-4)
    c0 = coeff_via_cm_exact(spec, 0)
    # c_i(Delta, 0) = (2 i y)^6 Delta(i) at y = 1
    assert abs(c0 - (2j) ** 6 * complex(delta_mp(1j))) < 1e-14
