import numpy as np
import pytest

from cusptaylor.cmdata import registry
from cusptaylor.kernels import backends
from cusptaylor.periodicity import ModRecursion
from cusptaylor.recurrences import cm_qseq

MODS = backends()
JOBS = [(-7, 23), (-15, 17), (-24, 5), (-3, 7), (-20, 11)]
STEPS = 700


def _rec(D, l):
    return ModRecursion(registry(D), l)


def _run_advance(mod, rec):
    prev, curr = rec.initial()
    consts = np.zeros(STEPS, dtype=np.int64)
    mod.advance(prev, curr, 0, STEPS, rec.lin, rec.quad, rec.a3, rec.l, rec.d, consts)
    return consts, prev, curr


def _run_trajectory(mod, rec):
    prev, curr = rec.initial()
    out = np.zeros((STEPS + 1, 2, rec.l), dtype=np.int64)
    mod.trajectory(prev, curr, 0, STEPS, rec.lin, rec.quad, rec.a3, rec.l, rec.d, out)
    return out


def _run_psi(mod, rec):
    blocks = STEPS // rec.l + 1
    out = np.zeros(blocks * rec.l, dtype=np.int64)
    X = np.zeros((2, rec.l), dtype=np.int64)
    X[0, 0] = 1
    mod.psi_consts(np.ascontiguousarray(rec.response_maps[rec.l]), rec.phi, X, blocks, rec.l, rec.d, out)
    return out


@pytest.mark.parametrize("D,l", JOBS)
def test_python_kernel_matches_exact(D, l):
    rec = _rec(D, l)
    traj = _run_trajectory(MODS["python"], rec)
    for n in (0, 1, 2, 17, 40):
        assert np.array_equal(traj[n], cm_qseq(registry(D), n).reduce(l).coeffs)


@pytest.mark.parametrize("D,l", JOBS)
def test_psi_constants_match_stepping(D, l):
    rec = _rec(D, l)
    consts, _, _ = _run_advance(MODS["python"], rec)
    assert np.array_equal(_run_psi(MODS["python"], rec)[:STEPS], consts)


@pytest.mark.skipif("cython" not in MODS, reason="compiled kernels not built")
@pytest.mark.parametrize("D,l", JOBS)
def test_backends_agree(D, l):
    rec = _rec(D, l)
    py, cy = MODS["python"], MODS["cython"]
    for a, b in zip(_run_advance(py, rec), _run_advance(cy, rec)):
        assert np.array_equal(a, b)
    assert np.array_equal(_run_trajectory(py, rec), _run_trajectory(cy, rec))
    assert np.array_equal(_run_psi(py, rec), _run_psi(cy, rec))
    results = []
    for mod in (py, cy):
        pa, ca = rec.initial()
        pb, cb = rec.state_at(l - 1)
        args = [np.ascontiguousarray(x) for x in (pa, ca, pb, cb)]
        results.append(mod.compare_run(args[0], args[1], 0, args[2], args[3], l, 200,
                                       rec.lin, rec.quad, rec.a3, rec.l, rec.d, False))
    assert results[0] == results[1]
