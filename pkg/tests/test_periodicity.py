import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cusptaylor.cmdata import DISCRIMINANTS, registry
from cusptaylor.exactalg import TruncPoly
from cusptaylor.periodicity import (ALL_NONZERO, HAS_ZERO_AT, TENDS_TO_ZERO, BudgetExceeded, ModRecursion,
                                    box_bound, certify_nonvanishing, detect_cycle, annihilation_check,
                                    period_relations_check, residue_criterion_scan, residue_prediction,
                                    tends_to_zero, verify_certificate)
from cusptaylor.recurrences import QuadPoly, cm_qseq, cm_recursion_coeffs


def _reduce(q, l, f):
    a = [x % l for x in q.a[:l]]
    b = None if f.is_rational else [x % l for x in q.b[:l]]
    return QuadPoly(a, b, f)


def brute_force_cycle(spec, l, limit=200000):
    """(alpha, beta, constants) by stepping exact polynomials reduced mod l and hashing
    the state (n mod l, q_{n-1}, q_n)."""
    f = spec.field
    co = cm_recursion_coeffs(spec)
    prev, curr = QuadPoly([], None, f), QuadPoly.const(1, f)
    seq, seen = [], {}
    for n in range(limit):
        key = (tuple(curr.a), tuple(curr.b) if curr.b is not None else ())
        seq.append(key)
        state = (n % l, seq[-2] if n else None, key)
        if state in seen:
            mu, lam = seen[state], n - seen[state]
            break
        seen[state] = n
        prev, curr = curr, _reduce(co.step(prev, curr, n), l, f)
    else:
        raise RuntimeError("no repeat within limit")
    beta = min(p for p in range(1, lam + 1) if lam % p == 0
               and all(seq[k + p] == seq[k] for k in range(mu, mu + lam - p + 1)))
    alpha = mu
    while alpha > 0 and seq[alpha - 1 + beta] == seq[alpha - 1]:
        alpha -= 1
    consts = [(k[0][0] if k[0] else 0, k[1][0] if k[1] else 0) for k in seq]
    return alpha, beta, consts


CASES = [(-7, 5), (-7, 11), (-8, 5), (-3, 7), (-4, 5), (-4, 7), (-11, 5), (-24, 7),
         (-15, 7), (-20, 7), (-8, 17), (-19, 5)]


@pytest.mark.parametrize("D,l", CASES)
def test_cycle_matches_brute_force(D, l):
    spec = registry(D)
    alpha, beta, consts = brute_force_cycle(spec, l)
    cert = detect_cycle(spec, l)
    assert (cert.alpha, cert.beta) == (alpha, beta)
    # eventual vanishing of the constant terms, seen on the brute-force cycle
    cyc = [consts[n] for n in range(alpha, alpha + beta)]
    assert (cert.verdict == TENDS_TO_ZERO) == all(c == (0, 0) for c in cyc)
    assert tends_to_zero(spec, l) == all(c == (0, 0) for c in cyc)


@pytest.mark.parametrize("D,l", CASES)
def test_verdict_matches_scan(D, l):
    spec = registry(D)
    cert = detect_cycle(spec, l)
    _, _, consts = brute_force_cycle(spec, l)
    N = spec.elliptic_order
    zeros = [n for n in range(cert.alpha + cert.beta) if n % N == 0 and consts[n] == (0, 0)]
    if cert.verdict == ALL_NONZERO:
        assert not zeros
    elif cert.verdict == HAS_ZERO_AT:
        assert cert.zero_index == zeros[0]


@pytest.mark.parametrize("D,l", [(-7, 23), (-8, 17), (-11, 23), (-15, 17), (-3, 7)])
def test_certificates_verify(D, l):
    cert = certify_nonvanishing(registry(D), l)
    assert cert.verdict == ALL_NONZERO
    report = verify_certificate(cert)
    assert report["sound"]
    assert not annihilation_check(cert)["violation"]


def test_certificate_shortcut_data():
    cert = detect_cycle(registry(-7), 23)
    sc = cert.shortcut
    assert (sc.i0, sc.j0, sc.unit.a, sc.order) == (12, 265, 8, 11)
    cert = detect_cycle(registry(-8), 17)
    assert cert.shortcut.shift == 272 and cert.shortcut.order == 8


def test_tends_to_zero_example():
    assert tends_to_zero(registry(-4), 7)
    assert detect_cycle(registry(-4), 7).verdict == TENDS_TO_ZERO
    assert not tends_to_zero(registry(-4), 5)


def test_budget_error():
    with pytest.raises(BudgetExceeded) as info:
        detect_cycle(registry(-15), 83, max_steps=50, max_states=50)
    err = info.value
    assert err.to_dict()["steps"] == 50 and err.bound.startswith("83^")


def test_certificate_json_deterministic():
    a = detect_cycle(registry(-11), 23).to_json(timing=False)
    b = detect_cycle(registry(-11), 23).to_json(timing=False)
    assert a == b and "wall_time_ms" not in a


def test_rejects_bad_prime():
    with pytest.raises(ValueError):
        ModRecursion(registry(-7), 9)


@settings(max_examples=30)
@given(st.sampled_from(DISCRIMINANTS), st.sampled_from([5, 7, 11, 13]), st.integers(0, 300))
def test_psi_jump_matches_direct(D, l, n):
    spec = registry(D)
    rec = ModRecursion(spec, l)
    direct = list(rec.iterate(n + 1))[-1]
    assert np.array_equal(rec.q_at(n).coeffs, TruncPoly(direct, l, spec.field).coeffs)


@settings(max_examples=20)
@given(st.sampled_from(DISCRIMINANTS), st.sampled_from([5, 7, 11]), st.integers(0, 40))
def test_mod_stream_commutes_with_reduction(D, l, n):
    spec = registry(D)
    assert ModRecursion(spec, l).q_at(n) == cm_qseq(spec, n).reduce(l)


def test_residue_scan_small():
    rep = residue_criterion_scan(-7, lmax=40, workers=1)
    assert rep.ok
    assert [r["prime"] for r in rep.rows if not r["tends_to_zero"]] == \
        [l for l in (11, 23, 29, 37) if residue_prediction(-7, l)]


@pytest.mark.parametrize("D,l", [(-8, 17), (-7, 23)])
def test_period_relations(D, l):
    out = period_relations_check(registry(D), l)
    assert out["ok"] is True


@pytest.mark.parametrize("D,l", CASES)
def test_box_bound(D, l):
    spec = registry(D)
    cert = detect_cycle(spec, l)
    assert cert.alpha + cert.beta <= box_bound(l, spec.field)
    assert cert.beta % cert.constant_period == 0
