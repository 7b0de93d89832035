import math
from dataclasses import replace

import numpy as np
import pytest

from cusptaylor.cmdata import registry
from cusptaylor.numerics import eval_calE
from cusptaylor.zerofinder import (I_POINT, OMEGA, CertificateError, SearchRegion, boundary_zeros,
                                   damped_newton, expand_pairs, find_zeros, forced_zeros, interior_zeros,
                                   no_sign_change_above, sign_change_certificate, winding_number, zero_count)

REGION = SearchRegion()


def _locs(records, kind=None):
    return [r.location for r in records if kind is None or r.kind == kind]


def _has(records, z, tol, kind):
    return any(abs(w - z) < tol for w in _locs(records, kind))


@pytest.fixture(scope="module")
def zeros():
    return {m: find_zeros(m) for m in (1, 2, 3, 4, 6)}


@pytest.mark.parametrize("m", range(1, 13))
def test_forced_zeros(m):
    expect = ([I_POINT] if m % 2 else []) + ([OMEGA] if m % 3 else [])
    assert forced_zeros(m) == expect
    for z in expect:
        assert abs(eval_calE(m, z)) < 1e-9 * 12.0 ** m


@pytest.mark.parametrize("m", range(1, 13))
def test_forced_zeros_reported(m):
    recs = boundary_zeros(m, replace(REGION, boundary_samples=800))
    assert sorted(_locs(recs, "elliptic_forced"), key=abs) == sorted(forced_zeros(m), key=abs)


def test_first_orders(zeros):
    assert sorted(_locs(zeros[1]), key=abs) == sorted([I_POINT, OMEGA], key=abs)
    assert zero_count(zeros[1]) == 2
    assert zero_count(zeros[2]) == 3
    assert _has(zeros[2], 1.344j, 5e-4, "line_re0")
    assert _has(zeros[2], complex(-0.5, 1.29), 5e-3, "line_rehalf")
    assert zero_count(zeros[3]) == 4
    assert _has(zeros[3], 1.666j, 5e-4, "line_re0")
    assert _has(zeros[3], complex(-0.5, 1.642), 5e-4, "line_rehalf")
    assert _has(zeros[3], complex(-0.5, 1.155), 5e-4, "line_rehalf")


def test_m6_all_on_boundary(zeros):
    recs = zeros[6]
    assert not [r for r in recs if r.kind == "interior_pair"]
    assert zero_count(recs) == 9


def test_residuals_and_mirrors(zeros):
    for m, recs in zeros.items():
        for r in recs:
            assert r.confirmed
            assert abs(eval_calE(m, r.location)) < 1e-6 * 12.0 ** m
            if r.mirror is not None:
                assert abs(r.mirror + r.location.conjugate()) < 1e-15
                assert abs(eval_calE(m, r.mirror)) < 1e-6 * 12.0 ** m


def test_grid_refinement_keeps_counts():
    fine = replace(REGION, grid_step=0.005, boundary_samples=8000)
    for m in (4, 5):
        assert zero_count(find_zeros(m)) == zero_count(find_zeros(m, fine))


def test_interior_pair_m7():
    recs = interior_zeros(7)
    assert len(recs) == 1 and recs[0].confirmed
    z = recs[0].location
    assert abs(z - complex(-0.302, 1.18)) < 5e-3
    assert abs(recs[0].certificate["winding"]) == 1
    assert {k for k, _ in expand_pairs(recs)} == {"interior_pair"} and len(expand_pairs(recs)) == 2


def test_no_sign_change_above():
    assert all(no_sign_change_above(m) for m in (1, 2, 3, 6))


def test_certificate_m2_exact_endpoints():
    cert = sign_change_certificate(2, 1.0, math.sqrt(2), "re0", (registry(-4), registry(-8)))
    ends = cert["endpoints"]
    assert cert["valid"]
    assert [e["exact"]["sign"] for e in ends] == [-1, 1]
    assert [e["exact"]["rational_part"] for e in ends] == ["-144", "72"]
    assert all(abs(e["exact"]["value"] - e["value"]) < 1e-10 * abs(e["value"]) for e in ends)


def test_certificate_m3_bracket_and_margin():
    cert = sign_change_certificate(3, 1.5, 1.8)
    assert cert["valid"]
    with pytest.raises(CertificateError) as info:
        sign_change_certificate(3, 1.5, 1.6)
    assert info.value.code == "MARGIN"


def test_certificate_rejects_wrong_cm_point():
    with pytest.raises(ValueError):
        sign_change_certificate(2, 1.1, math.sqrt(2), "re0", (registry(-4), registry(-8)))


def test_newton_and_winding_on_polynomial():
    F = lambda z: np.asarray(z) ** 2 - (0.3 + 1.2j) ** 2
    z, res, _ = damped_newton(F, complex(0.5, 1.0))
    assert abs(z - (0.3 + 1.2j)) < 1e-10 and res < 1e-12
    assert winding_number(F, z) == 1
    assert winding_number(F, z + 0.1) == 0


def test_order_range():
    with pytest.raises(ValueError):
        find_zeros(0)
