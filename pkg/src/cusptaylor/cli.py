"""Command line front end: ``cusptaylor <subcommand> [flags]``.

Output is JSON Lines on stdout, starting with a header object that records
the effective configuration.  Exit codes: 0 success, 1 verification failure
or exhausted budget, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

from . import __version__

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _plain(x):
    # numpy scalars that json does not know
    if hasattr(x, "item"):
        return x.item()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, default=_plain)


def _cx(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _header(args, out, prefix: str = ""):
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    cfg["budget_ms"] = os.environ.get("CUSPTAYLOR_BUDGET_MS")
    out.write(prefix + _dump({"cusptaylor": __version__, "config": cfg}) + "\n")


def _spec(D: int):
    from .cmdata import registry
    try:
        return registry(D)
    except (KeyError, ValueError) as exc:
        raise UsageError(exc.args[0] if exc.args else str(exc)) from exc


def _prime(l: int) -> int:
    from sympy import isprime
    if not isprime(l) or l < 3:
        raise UsageError(f"--prime must be an odd prime, got {l}")
    return l


# ----------------------------------------------------------------------------
# subcommands


def cmd_table(args, out) -> int:
    from .cmdata import table_rows
    for row in table_rows(args.precision):
        out.write(_dump(row) + "\n")
    return EXIT_OK


def cmd_coeff(args, out) -> int:
    from .numerics import (EPS, SeriesRangeError, coeff_via_cm_exact, coeff_via_derivatives,
                           coeff_via_calE, route_error_bounds)
    spec = _spec(args.disc) if args.disc is not None else None
    if args.route == "cm" and spec is None:
        raise UsageError("--route cm needs --disc")
    if args.x is None or args.y is None:
        if spec is None:
            raise UsageError("give --x and --y, or --disc for the CM point")
        z = spec.zD
    else:
        z = complex(args.x, args.y)
    if spec is not None and abs(z - spec.zD) > 1e-12:
        raise UsageError(f"--disc {args.disc} names the point {spec.zD}, not {z}")
    wanted = ["theorem", "derivative", "cm"] if args.route == "all" else [args.route]
    if spec is None and "cm" in wanted:
        wanted.remove("cm")
    try:
        bounds = route_error_bounds(z, args.m)
        routes = {}
        for r in wanted:
            if r == "theorem":
                v = coeff_via_calE(z, args.m)
                err = bounds["theorem"]
            elif r == "derivative":
                v = coeff_via_derivatives(z, args.m)
                err = bounds["derivative"] + 2 * EPS * abs(v)
            else:
                v = coeff_via_cm_exact(spec, args.m)
                err = 4 * EPS * abs(v)
            routes[r] = {"value": _cx(v), "error_bound": err}
    except SeriesRangeError as exc:
        raise UsageError(f"{exc} (move the point to the fundamental domain)") from exc
    vals = [complex(*r["value"]) for r in routes.values()]
    scale = max(abs(v) for v in vals)
    dis = max(abs(a - b) for a in vals for b in vals) / scale if scale else 0.0
    first = wanted[0]
    out.write(_dump({"m": args.m, "z": _cx(z), "route": first, "value": routes[first]["value"],
                     "error_bound": routes[first]["error_bound"], "routes": routes,
                     "max_rel_disagreement": dis}) + "\n")
    return EXIT_OK


_EXPECT = {"nonzero": "ALL_NONZERO", "tends-to-zero": "TENDS_TO_ZERO", "zero": "HAS_ZERO_AT"}


def cmd_certify(args, out) -> int:
    from .periodicity import BudgetExceeded, certify_nonvanishing
    spec, l = _spec(args.disc), _prime(args.prime)
    try:
        cert = certify_nonvanishing(spec, l, args.max_steps)
    except BudgetExceeded as exc:
        out.write(_dump(exc.to_dict()) + "\n")
        return EXIT_FAIL
    out.write(_dump(cert.to_dict(timing=not args.no_timing)) + "\n")
    if args.expect and cert.verdict != _EXPECT[args.expect]:
        out.write(_dump({"error": "EXPECTATION_FAILED", "expected": _EXPECT[args.expect],
                         "verdict": cert.verdict_label}) + "\n")
        return EXIT_FAIL
    return EXIT_OK


def cmd_period(args, out) -> int:
    from .periodicity import BudgetExceeded, detect_cycle, period_relations_check
    spec, l = _spec(args.disc), _prime(args.prime)
    try:
        cert = detect_cycle(spec, l, args.max_steps)
        rel = period_relations_check(spec, l, cert=cert)
    except BudgetExceeded as exc:
        out.write(_dump(exc.to_dict()) + "\n")
        return EXIT_FAIL
    out.write(_dump({"certificate": cert.to_dict(timing=not args.no_timing), "relations": rel}) + "\n")
    return EXIT_OK if rel["ok"] in (True, None) else EXIT_FAIL


def cmd_scan_residue(args, out) -> int:
    from .periodicity import residue_criterion_scan
    spec = _spec(args.disc)
    rep = residue_criterion_scan(spec.D, lmax=args.lmax, workers=args.threads)
    for row in rep.rows:
        row = dict(row)
        if args.no_timing:
            row.pop("wall_time_ms", None)
        out.write(_dump(row) + "\n")
    out.write(_dump({"summary": {"disc": spec.D, "primes": len(rep.rows),
                                 "mismatches": len(rep.mismatches)}}) + "\n")
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_zeros(args, out) -> int:
    from .zerofinder import SearchRegion, expand_pairs, find_zeros, zero_count
    if not 1 <= args.m <= 64:
        raise UsageError("--m must lie in [1, 64]")
    region = SearchRegion(tolerance=args.tol)
    recs = find_zeros(args.m, region)
    if args.emit == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m", "kind", "x", "y", "residual"])
        res = {r.location: r.residual_norm for r in recs}
        for r in recs:
            for kind, z in expand_pairs([r]):
                w.writerow([args.m, kind, repr(z.real), repr(z.imag), repr(res[r.location])])
        out.write(buf.getvalue())
    else:
        for r in recs:
            out.write(_dump(r.to_dict()) + "\n")
        out.write(_dump({"summary": {"m": args.m, "count": zero_count(recs),
                                     "unconfirmed": sum(not r.confirmed for r in recs)}}) + "\n")
    return EXIT_OK if all(r.confirmed for r in recs) else EXIT_FAIL


def cmd_avg_check(args, out) -> int:
    from .petersson import (PolicyRejected, TruncationPolicy, verify_elliptic_elliptic,
                            verify_parabolic_elliptic)
    kw = {}
    if args.cmax is not None:
        kw = {"c_max": args.cmax, "entry_max": args.cmax}
    policy = TruncationPolicy(**kw)
    z0 = complex(args.x0, args.y0)
    try:
        if args.kind == "parabolic-elliptic":
            if args.n < 1:
                raise UsageError("--n must be positive for parabolic-elliptic")
            rep = verify_parabolic_elliptic(z0, args.m, args.n, policy)
        else:
            x1 = args.x0 if args.x1 is None else args.x1
            y1 = args.y0 if args.y1 is None else args.y1
            rep = verify_elliptic_elliptic(z0, complex(x1, y1), args.m, args.n, policy)
    except PolicyRejected as exc:
        out.write(_dump({"error": "POLICY_REJECTED", "message": str(exc)}) + "\n")
        return EXIT_FAIL
    d = rep.to_dict()
    d["tolerance"] = args.tol
    d["ok"] = bool(rep.rel_err < args.tol)
    out.write(_dump(d) + "\n")
    return EXIT_OK if d["ok"] else EXIT_FAIL


def cmd_selftest(args, out) -> int:
    from .acceptance import FAIL, run_suite
    numbers = None
    if args.only:
        try:
            numbers = {int(x) for x in args.only.split(",")}
        except ValueError as exc:
            raise UsageError("--only takes comma separated criterion numbers") from exc
    if args.json:
        results = run_suite(numbers, seed=args.seed, workers=args.threads, echo=None)
        for r in results:
            d = r.to_dict()
            if args.no_timing:
                d.pop("seconds")
            out.write(_dump(d) + "\n")
    else:
        results = run_suite(numbers, seed=args.seed, workers=args.threads,
                            echo=lambda s: (out.write(s + "\n"), out.flush()))
    return EXIT_FAIL if any(r.status == FAIL for r in results) else EXIT_OK


# ----------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker processes (default: available cores)")
    common.add_argument("--no-timing", action="store_true",
                        help="omit wall-clock fields so identical runs give identical output")

    p = argparse.ArgumentParser(prog="cusptaylor", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("table", parents=[common], help="CM point registry as JSON")
    s.add_argument("--precision", type=int, default=15, help="digits of Omega_D")
    s.set_defaults(func=cmd_table)

    s = sub.add_parser("coeff", parents=[common], help="Taylor coefficient c_z(Delta, m)")
    s.add_argument("--x", type=float)
    s.add_argument("--y", type=float)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--route", choices=["all", "theorem", "derivative", "cm"], default="all")
    s.add_argument("--disc", type=int)
    s.set_defaults(func=cmd_coeff)

    for name, func, text in (("certify", cmd_certify, "non-vanishing certificate"),
                             ("period", cmd_period, "periods of q_n mod l")):
        s = sub.add_parser(name, parents=[common], help=text)
        s.add_argument("--disc", type=int, required=True)
        s.add_argument("--prime", type=int, required=True)
        s.add_argument("--max-steps", type=int, default=10 ** 8)
        if name == "certify":
            s.add_argument("--expect", choices=sorted(_EXPECT))
        s.set_defaults(func=func)

    s = sub.add_parser("scan-residue", parents=[common], help="residue criterion over primes")
    s.add_argument("--disc", type=int, required=True)
    s.add_argument("--lmax", type=int, default=100)
    s.set_defaults(func=cmd_scan_residue)

    s = sub.add_parser("zeros", parents=[common], help="zeros of calE_m in the fundamental domain")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--emit", choices=["json", "csv"], default="json")
    s.set_defaults(func=cmd_zeros)

    s = sub.add_parser("avg-check", parents=[common], help="Poincare series identities")
    s.add_argument("--kind", choices=["parabolic-elliptic", "elliptic-elliptic"], required=True)
    s.add_argument("--x0", type=float, required=True)
    s.add_argument("--y0", type=float, required=True)
    s.add_argument("--x1", type=float)
    s.add_argument("--y1", type=float)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--cmax", type=int)
    s.add_argument("--tol", type=float, default=1e-3)
    s.set_defaults(func=cmd_avg_check)

    s = sub.add_parser("selftest", parents=[common], help="run the acceptance suite")
    s.add_argument("--only", help="comma separated criterion numbers")
    s.add_argument("--json", action="store_true", help="JSON Lines instead of text lines")
    s.set_defaults(func=cmd_selftest)
    return p


def run(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    # CSV output carries the header as a comment line
    _header(args, out, "# " if args.command == "zeros" and args.emit == "csv" else "")
    try:
        return args.func(args, out)
    except UsageError as exc:
        out.write(_dump({"error": "USAGE", "message": str(exc)}) + "\n")
        return EXIT_USAGE


def main(argv=None) -> int:
    code = run(argv)
    sys.stdout.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
