"""Floating point evaluation of E2*, E4, E6, Delta, the functions calE_m and
the Taylor coefficients c_z(Delta, m) at points of the upper half plane.

Three independent routes to c_z(Delta, m):

* ``coeff_via_calE``: Delta(z) (pi i/6)^m (z - zbar)^(m+6) times the
  finite sum over r of binom(m+11, r+11) (E2*)^(m-r) B_r(E4, E6) / r!;
* ``coeff_via_derivatives``: (2iy)^6 sum_n tau(n) q^n L_m(4 pi n y), where
  L_m(x) = sum_r binom(m+11, r+11) (-x)^r / r! collects the derivatives;
* ``coeff_via_cm_exact``: kappa lambda^m q_m(0) / m! at a CM point, with the
  exact integer q_m(0).
"""
from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

from .cmdata import CMPointSpec, chowla_selberg, normalization
from .exactalg import KElt
from .recurrences import bseq, cm_qseq

SQRT3_2 = math.sqrt(3.0) / 2.0
EPS = np.finfo(float).eps


class SeriesRangeError(ValueError):
    """The truncated q-series is not accurate enough at this point; reduce z first."""


@dataclass(frozen=True)
class UpperHalfPoint:
    x: float
    y: float

    def __post_init__(self):
        if not self.y > 0:
            raise ValueError("point must lie in the upper half plane")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)

    @staticmethod
    def of(z) -> UpperHalfPoint:
        z = complex(z)
        return UpperHalfPoint(z.real, z.imag)


@dataclass(frozen=True)
class SeriesContext:
    """Truncation of the q-expansions (number of terms) and accepted tail."""

    n_terms: int = 25
    tol: float = 1e-13

    def tail_bound(self, y, k: int = 6) -> float:
        """Majorant for the dropped part of sum sigma_{k-1}(n) |q|^n, using sigma_{k-1}(n) <= n^k.

        Successive terms n^k r^n have ratio at most rho = r ((N+2)/(N+1))^k, so the
        tail is at most (N+1)^k r^(N+1) / (1 - rho) when rho < 1.
        """
        y = float(np.min(y))
        if not y > 0.05:
            return math.inf
        N = self.n_terms
        log_r = -2 * math.pi * y
        log_rho = log_r + k * math.log((N + 2) / (N + 1))
        if log_rho >= 0:
            return math.inf
        return math.exp(k * math.log(N + 1) + (N + 1) * log_r) / (1 - math.exp(log_rho))

    def check(self, y, k: int = 6, scale: float = 504.0):
        tb = scale * self.tail_bound(y, k)
        if tb > self.tol:
            raise SeriesRangeError(f"tail bound {tb:.2e} exceeds {self.tol:.0e} at y={float(np.min(y)):.4f}")
        return tb


DEFAULT_CONTEXT = SeriesContext()


# ----------------------------------------------------------------------------
# exact arithmetic functions


def divisor_sigma(j: int, n: int) -> int:
    """sum of d^j over the divisors d of n."""
    if n < 1:
        raise ValueError("n must be positive")
    total = 0
    d = 1
    while d * d <= n:
        if n % d == 0:
            total += d ** j
            e = n // d
            if e != d:
                total += e ** j
        d += 1
    return total


def sigma_sums(k: int, n: int) -> int:
    """sigma_{k-1}(n), the divisor sum entering the q-expansion of E_k."""
    return divisor_sigma(k - 1, n)


def _poly_pow_kronecker(coeffs: list[int], e: int, N: int, bits: int) -> list[int]:
    """coeffs^e truncated to degree < N via Kronecker substitution in Python integers."""
    def pack(c):
        v = 0
        for x in reversed(c):
            v = (v << bits) + x
        return v

    offset = pack([1 << (bits - 1)] * N)
    mask = (1 << (N * bits)) - 1

    def unpack(v):
        # the low N digits of v, read with the offset that makes each digit nonnegative
        raw = (((v & mask) + offset) & mask).to_bytes(N * bits // 8, "little")
        step = bits // 8
        return [int.from_bytes(raw[i * step:(i + 1) * step], "little") - (1 << (bits - 1))
                for i in range(N)]

    result = None
    base = pack(coeffs[:N])
    while e:
        if e & 1:
            result = base if result is None else pack(unpack(result * base))
        e >>= 1
        if e:
            base = pack(unpack(base * base))
    return unpack(result)


@lru_cache(maxsize=8)
def delta_q_coeffs(N: int) -> tuple[int, ...]:
    """tau(1), ..., tau(N) from Delta = q prod (1 - q^n)^24.

    prod (1 - q^n)^3 has the sparse expansion sum (-1)^k (2k+1) q^(k(k+1)/2);
    its eighth power is formed by three squarings of packed big integers.
    """
    if N < 1 or N > 10 ** 5:
        raise ValueError("N must lie in [1, 100000]")
    M = N  # coefficients of q^0 .. q^(N-1) of the product
    eta3 = [0] * M
    k = 0
    while k * (k + 1) // 2 < M:
        eta3[k * (k + 1) // 2] = (-1) ** k * (2 * k + 1)
        k += 1
    bits = 8 * math.ceil((6.5 * math.log2(M + 2) + 48) / 8)
    prod = _poly_pow_kronecker(eta3, 8, M, bits)
    return tuple(prod[:N])


def tau(n: int) -> int:
    return delta_q_coeffs(max(n, 1))[n - 1]


def tau_by_sigma_recursion(N: int) -> list[int]:
    """tau(1..N) from n a_n = -24 sum_k sigma(k) a_{n-k} for prod (1-q^n)^24 (independent route)."""
    a = [1] + [0] * (N - 1)
    sig = [0] + [divisor_sigma(1, k) for k in range(1, N)]
    for n in range(1, N):
        s = 0
        for k in range(1, n + 1):
            s += sig[k] * a[n - k]
        a[n] = -24 * s // n
    return a


# ----------------------------------------------------------------------------
# q-series


@lru_cache(maxsize=None)
def _eis_coeffs(k: int, N: int) -> np.ndarray:
    return np.array([sigma_sums(k, n) for n in range(1, N + 1)], dtype=float)


def _qseries(coeffs: np.ndarray, q):
    """sum_{n>=1} coeffs[n-1] q^n by Horner's rule (q may be an array)."""
    acc = np.zeros_like(q)
    for c in coeffs[::-1]:
        acc = (acc + c) * q
    return acc


def _prep(z, ctx: SeriesContext, k: int, scale: float):
    z = np.asarray(z, dtype=complex)
    ctx.check(z.imag, k, scale)
    return z, np.exp(2j * np.pi * z)


def _scalar(v, z):
    return complex(v) if np.ndim(z) == 0 else v


def eval_E2(z, ctx: SeriesContext = DEFAULT_CONTEXT):
    za, q = _prep(z, ctx, 2, 24.0)
    return _scalar(1 - 24 * _qseries(_eis_coeffs(2, ctx.n_terms), q), z)


def eval_E2star(z, ctx: SeriesContext = DEFAULT_CONTEXT):
    za = np.asarray(z, dtype=complex)
    return _scalar(np.asarray(eval_E2(za, ctx)) - 3 / (np.pi * za.imag), z)


def eval_E4(z, ctx: SeriesContext = DEFAULT_CONTEXT):
    za, q = _prep(z, ctx, 4, 240.0)
    return _scalar(1 + 240 * _qseries(_eis_coeffs(4, ctx.n_terms), q), z)


def eval_E6(z, ctx: SeriesContext = DEFAULT_CONTEXT):
    za, q = _prep(z, ctx, 6, 504.0)
    return _scalar(1 - 504 * _qseries(_eis_coeffs(6, ctx.n_terms), q), z)


def eval_delta(z, ctx: SeriesContext = DEFAULT_CONTEXT):
    za, q = _prep(z, ctx, 6, 1.0)
    coeffs = np.array(delta_q_coeffs(ctx.n_terms), dtype=float)
    return _scalar(_qseries(coeffs, q), z)


# ----------------------------------------------------------------------------
# calE_m and the coefficient routes


def _weights(m: int) -> list[int]:
    """m!/r! binom(m+11, r+11) for r = 0..m, exact."""
    return [math.factorial(m) // math.factorial(r) * math.comb(m + 11, r + 11) for r in range(m + 1)]


def eval_calE(m: int, z, ctx: SeriesContext = DEFAULT_CONTEXT):
    """calE_m(z) = sum_r m!/r! binom(m+11, r+11) (E2*)^(m-r) B_r(E4, E6)."""
    if m < 0 or m > 64:
        raise ValueError("m must lie in [0, 64]")
    za = np.asarray(z, dtype=complex)
    e2 = np.asarray(eval_E2star(za, ctx))
    Q = np.asarray(eval_E4(za, ctx))
    R = np.asarray(eval_E6(za, ctx))
    total = np.zeros_like(e2)
    for r, w in enumerate(_weights(m)):
        if r == 1:
            continue  # B_1 = 0
        total = total + float(w) * e2 ** (m - r) * bseq(r).evaluate(Q, R)
    return _scalar(total, z)


def calE_error_bound(m: int, z, ctx: SeriesContext = DEFAULT_CONTEXT) -> float:
    """Bound on |calE_m(z) - computed value| from the q-series tails plus rounding.

    Each monomial x^alpha of the polynomial in (E2*, E4, E6) moves by at most
    sum_i alpha_i delta_i (|x| + delta)^(alpha - e_i) when every input moves by delta_i.
    """
    z = complex(z)
    y = z.imag
    r = math.exp(-2 * math.pi * y)
    deltas = []
    for k, scale in ((2, 24), (4, 240), (6, 504)):
        # truncation tail plus rounding in the partial sum (which has magnitude near 1)
        absum = 1 + scale * float(np.sum(_eis_coeffs(k, ctx.n_terms) * r ** np.arange(1, ctx.n_terms + 1)))
        deltas.append(scale * ctx.tail_bound(y, k) + 4 * ctx.n_terms * EPS * absum)
    deltas[0] += 4 * EPS * 3 / (math.pi * y)
    x = (abs(eval_E2star(z, ctx)), abs(eval_E4(z, ctx)), abs(eval_E6(z, ctx)))
    xd = tuple(v + e for v, e in zip(x, deltas))
    tail = 0.0
    size = 0.0
    for r, w in enumerate(_weights(m)):
        if r == 1:
            continue
        for (a, b), c in bseq(r).terms.items():
            alpha = (m - r, b, a)
            coef = abs(float(w) * float(c))
            size += coef * x[0] ** alpha[0] * x[1] ** alpha[1] * x[2] ** alpha[2]
            for i in range(3):
                if alpha[i]:
                    e = list(alpha)
                    e[i] -= 1
                    tail += coef * alpha[i] * deltas[i] * xd[0] ** e[0] * xd[1] ** e[1] * xd[2] ** e[2]
    return tail + 8 * (m + ctx.n_terms) * EPS * size


def calE_at_cm(spec: CMPointSpec, m: int) -> tuple[KElt, KElt]:
    """(u, v) with calE_m(z_D) = (u + v sqrt|D|) Omega_D^(2m), exactly.

    Uses E2* = k1 |D|^(-1/2) Omega^2, E4 = k2 Omega^4 and E6 = k3 |D|^(1/2) Omega^6.
    """
    N = abs(spec.D)
    zero = KElt.of(0, spec.field)
    parts = [zero, zero]
    for r, w in enumerate(_weights(m)):
        if r == 1:
            continue
        for (a, b), c in bseq(r).terms.items():
            e = a - (m - r)          # power of |D|^(1/2)
            val = KElt.of(w * c, spec.field) * spec.k1 ** (m - r) * spec.k2 ** b * spec.k3 ** a
            val = val * KElt.of(Fraction(N) ** (e // 2), spec.field)
            parts[e % 2] = parts[e % 2] + val
    return parts[0], parts[1]


def cm_table_residuals(spec: CMPointSpec, ctx: SeriesContext = DEFAULT_CONTEXT) -> dict:
    """Absolute differences between the q-series values at z_D and the registry forms.

    e2, e4, e6 compare E2*, Q = E4 and R = E6 with k1 |D|^(-1/2) Omega^2,
    k2 Omega^4 and k3 |D|^(1/2) Omega^6; should_have_zero is
    |E2* - (m1/m2) R/Q| when m1, m2 are defined.
    """
    z = spec.zD
    N = abs(spec.D)
    omega = float(chowla_selberg(spec.D, 20))
    e2, e4, e6 = (complex(f(z, ctx)) for f in (eval_E2star, eval_E4, eval_E6))
    out = {
        "e2": abs(e2 - spec.k1.to_float() * N ** -0.5 * omega ** 2),
        "e4": abs(e4 - spec.k2.to_float() * omega ** 4),
        "e6": abs(e6 - spec.k3.to_float() * N ** 0.5 * omega ** 6),
    }
    if spec.m1 is not None and spec.D < -4:
        ratio = spec.m1.to_kelt().to_float() / spec.m2.to_kelt().to_float()
        out["should_have_zero"] = abs(e2 - ratio * e6 / e4)
    return out


def kelt_sign(x: KElt) -> int:
    """Exact sign of a + b sqrt(d)."""
    a, b, d = x.a, x.b, x.field.d
    sa, sb = (a > 0) - (a < 0), (b > 0) - (b < 0)
    if sb == 0 or sa == sb:
        return sa or sb
    if sa == 0:
        return sb
    return sa if a * a > b * b * d else (sb if a * a < b * b * d else 0)


def coeff_via_calE(z, m: int, ctx: SeriesContext = DEFAULT_CONTEXT) -> complex:
    z = complex(z)
    y = z.imag
    pref = complex(eval_delta(z, ctx)) * (1j * math.pi / 6) ** m * (2j * y) ** (m + 6)
    return pref * complex(eval_calE(m, z, ctx)) / math.factorial(m)


def coeff_via_derivatives(z, m: int, n_terms: int = 40, dps: int = 30) -> complex:
    """(2iy)^6 sum_n tau(n) q^n L_m(4 pi n y).

    The alternating sum L_m cancels heavily for m near 12 (terms of size 1e12
    for a result of order 1), so it is summed with `dps` decimal digits.
    """
    z = complex(z)
    y = z.imag
    if y < 0.5:
        raise SeriesRangeError("reduce z before using the tau-series route")
    taus = delta_q_coeffs(n_terms)
    weights = [math.comb(m + 11, r + 11) for r in range(m + 1)]
    with mpmath.workdps(dps):
        zm = mpmath.mpc(z.real, y)
        ym = mpmath.mpf(y)
        total = mpmath.mpc(0)
        for n in range(1, n_terms + 1):
            x = 4 * mpmath.pi * n * ym
            term, lag = mpmath.mpf(1), mpmath.mpf(0)
            for r, w in enumerate(weights):
                lag += w * term
                term = term * (-x) / (r + 1)
            total += taus[n - 1] * mpmath.exp(2j * mpmath.pi * zm * n) * lag
        return complex((2j * ym) ** 6 * total)


def route_error_bounds(z, m: int, ctx: SeriesContext = DEFAULT_CONTEXT, n_terms: int = 40) -> dict:
    """A priori error bounds for the theorem and derivative routes at z.

    Both use |tau(n)| <= n^7.  The theorem route combines the calE_m bound with
    the tail of the Delta series; the derivative route bounds the dropped
    n > n_terms by summing the majorant over the next 400 terms, beyond which
    it is below double precision for any y >= 1/2.
    """
    z = complex(z)
    y = z.imag
    base = (math.pi / 6) ** m * (2 * y) ** (m + 6) / math.factorial(m)
    E = abs(complex(eval_calE(m, z, ctx)))
    dl = abs(complex(eval_delta(z, ctx)))
    theorem = base * (dl * calE_error_bound(m, z, ctx) + ctx.tail_bound(y, 7) * E) \
        + 8 * (m + 6) * EPS * base * dl * E
    weights = [math.comb(m + 11, r + 11) for r in range(m + 1)]
    tail = 0.0
    for n in range(n_terms + 1, n_terms + 401):
        x = 4 * math.pi * n * y
        lag = sum(w * x ** r / math.factorial(r) for r, w in enumerate(weights))
        tail += n ** 7 * math.exp(-2 * math.pi * n * y) * lag
    return {"theorem": float(theorem), "derivative": float((2 * y) ** 6 * tail)}


def coeff_via_cm_exact(spec: CMPointSpec, m: int, precision: int = 30) -> complex:
    """kappa lambda^m q_m(0) / m! using the exact q_m(0) in O_K."""
    norm = normalization(spec, precision)
    q0 = cm_qseq(spec, m).constant()
    with mpmath.workdps(precision + 10):
        val = q0.to_kelt().to_mpf(mpmath)
        out = norm.kappa * norm.lam ** m * val / mpmath.factorial(m)
        return complex(out)


def coeff_all_routes(z, m: int, spec: CMPointSpec | None = None) -> dict:
    routes = {"theorem": coeff_via_calE(z, m), "derivative": coeff_via_derivatives(z, m)}
    if spec is not None:
        routes["cm"] = coeff_via_cm_exact(spec, m)
    vals = list(routes.values())
    scale = max(abs(v) for v in vals)
    dis = max(abs(a - b) for a in vals for b in vals) / scale if scale else 0.0
    return {"routes": routes, "max_rel_disagreement": dis}


def taylor_coefficients(z, M: int) -> list[complex]:
    """c_z(Delta, m) for m = 0..M: Delta|sigma_z(w) = sum_m c_z(Delta, m) w^m."""
    return [coeff_via_calE(z, m) for m in range(M + 1)]


# ----------------------------------------------------------------------------
# SL(2, Z) reduction


def reduce_to_fundamental(z, max_iter: int = 10000):
    """(z', (a, b, c, d)) with z' = (az + b)/(cz + d) in the standard fundamental domain."""
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("point must lie in the upper half plane")
    a, b, c, d = 1, 0, 0, 1
    for _ in range(max_iter):
        n = math.floor(z.real + 0.5)
        if n:
            z -= n
            a, b = a - n * c, b - n * d
        if abs(z) < 1 - 1e-15:
            z = -1 / z
            a, b, c, d = -c, -d, a, b
        else:
            break
    if a * d - b * c != 1:
        raise AssertionError("reduction lost the determinant")
    return z, (a, b, c, d)


def mobius(g, z):
    a, b, c, d = g
    return (a * z + b) / (c * z + d)


def automorphy(g, z):
    a, b, c, d = g
    return c * z + d
