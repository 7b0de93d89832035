import mpmath
import pytest

from cusptaylor.cmdata import (DISCRIMINANTS, all_specs, chowla_selberg, delta_mp, derived_m1_m2,
                               nontrivial_indices, normalization, registry, table_rows)
from cusptaylor.exactalg import QSQRT2, QSQRT5, RATIONAL, KElt, QuadElt
from cusptaylor.numerics import cm_table_residuals


def test_registry_lookup():
    assert [s.D for s in all_specs()] == list(DISCRIMINANTS)
    assert registry(-15).field == QSQRT5
    assert registry(-24).field == QSQRT2
    assert registry(-7).field == RATIONAL
    assert registry(-3).elliptic_order == 3
    assert registry(-4).elliptic_order == 2
    with pytest.raises(KeyError):
        registry(-5)


def test_cm_points():
    assert registry(-4).zD == 1j
    assert abs(registry(-3).zD - complex(0.5, 3 ** 0.5 / 2)) < 1e-15
    assert abs(registry(-24).zD - complex(0, 6 ** 0.5)) < 1e-15


def test_derived_m1_m2():
    m1, m2, g = derived_m1_m2(registry(-7))
    assert (m1, m2, g) == (QuadElt(5, 0), QuadElt(21, 0), 9)
    for spec in all_specs():
        if spec.D < -4:
            m1, m2, _ = derived_m1_m2(spec)
            assert (m1, m2) == (spec.m1, spec.m2)
    with pytest.raises(ValueError):
        derived_m1_m2(registry(-4))


def test_chowla_selberg_closed_forms():
    mpmath.mp.dps = 30
    # the product formula simplified with the reflection formula for Gamma
    om4 = mpmath.gamma(mpmath.mpf(1) / 4) ** 2 / (4 * mpmath.pi ** 1.5)
    om3 = mpmath.mpf(3) ** 0.25 * mpmath.gamma(mpmath.mpf(1) / 3) ** 3 / (4 * mpmath.pi ** 2)
    assert abs(chowla_selberg(-4) - om4) < 1e-25
    assert abs(chowla_selberg(-3) - om3) < 1e-25
    assert abs(float(chowla_selberg(-4)) - 0.5902) < 1e-4
    assert abs(float(chowla_selberg(-3)) - 0.6409) < 1e-4


def test_delta_against_periods():
    # Delta(i) = Omega_{-4}^12 and Delta(omega) = -Omega_{-3}^12
    assert abs(delta_mp(1j) - chowla_selberg(-4) ** 12) < 1e-28
    w = registry(-3).zD_mp()
    assert abs(delta_mp(w) + chowla_selberg(-3) ** 12) < 1e-28


@pytest.mark.parametrize("D", DISCRIMINANTS)
def test_normalization_kappa(D):
    spec = registry(D)
    nz = normalization(spec)
    expect = -abs(D) ** 3 * delta_mp(spec.zD_mp())
    assert abs(nz.kappa - expect) < 1e-20 * abs(expect)
    assert abs(nz.lambda_c.imag) < 1e-25 and nz.lambda_c.real < 0


@pytest.mark.parametrize("D", DISCRIMINANTS)
def test_table_residuals(D):
    res = cm_table_residuals(registry(D))
    assert max(v for k, v in res.items() if isinstance(v, float)) < 1e-12


def test_negative_control_detects_corruption():
    spec = registry(-7)
    bad = spec.with_overrides(k1=spec.k1 + KElt.of(1, spec.field))
    res = cm_table_residuals(bad)
    assert res["e2"] > 1e-3


def test_nontrivial_indices():
    assert [n for n in range(10) if nontrivial_indices(registry(-4))(n)] == [0, 2, 4, 6, 8]
    assert [n for n in range(10) if nontrivial_indices(registry(-3))(n)] == [0, 3, 6, 9]
    assert all(nontrivial_indices(registry(-7))(n) for n in range(10))


def test_table_rows_json_friendly():
    import json
    rows = table_rows()
    assert len(rows) == len(DISCRIMINANTS)
    json.dumps(rows)
