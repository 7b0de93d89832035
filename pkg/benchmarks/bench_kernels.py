"""Compare the compiled and numpy stepping kernels on the mod-l recursion.

    python3 benchmarks/bench_kernels.py [--steps N] [--repeat R]

Both backends run the same jobs and must produce identical arrays; the table
reports the best wall time of R repetitions and the speed-up.
"""
import argparse
import time

import numpy as np

from cusptaylor.cmdata import registry
from cusptaylor.kernels import backends
from cusptaylor.periodicity import ModRecursion

JOBS = [(-7, 23), (-15, 17), (-15, 83), (-24, 5)]


def _advance(mod, rec, steps):
    prev, curr = rec.initial()
    consts = np.zeros(steps, dtype=np.int64)
    mod.advance(prev, curr, 0, steps, rec.lin, rec.quad, rec.a3, rec.l, rec.d, consts)
    return consts


def _psi(mod, rec, steps):
    l = rec.l
    blocks = -(-steps // l)
    out = np.zeros(blocks * l, dtype=np.int64)
    X = np.zeros((2, l), dtype=np.int64)
    X[0, 0] = 1
    mod.psi_consts(np.ascontiguousarray(rec.response_maps[l]), rec.phi, X, blocks, l, rec.d, out)
    return out[:steps]


def best_of(fn, repeat):
    best, result = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    mods = backends()
    if "cython" not in mods:
        print("compiled kernels not built; only the numpy backend is available")
    print(f"{'job':<12}{'kernel':<10}" + "".join(f"{n:>12}" for n in mods) + f"{'speed-up':>10}")
    for D, l in JOBS:
        rec = ModRecursion(registry(D), l)
        for name, job in (("advance", _advance), ("psi", _psi)):
            times, results = {}, {}
            for b, mod in mods.items():
                times[b], results[b] = best_of(lambda: job(mod, rec, args.steps), args.repeat)
            vals = list(results.values())
            if not all(np.array_equal(vals[0], v) for v in vals[1:]):
                raise SystemExit(f"backends disagree on {name} for D={D}, l={l}")
            speed = times["python"] / times["cython"] if "cython" in times else 1.0
            print(f"{f'{D},{l}':<12}{name:<10}" + "".join(f"{times[b]:>11.4f}s" for b in mods)
                  + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
