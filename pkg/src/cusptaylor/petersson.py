"""Truncated Poincare series for SL(2, Z) and numerical checks of the
averaged coefficient identities they satisfy in weight 12.

Series:

* F_k(z, n, s) = sum over Gamma_inf\\Gamma of Im(gz)^(s-k/2) j(g,z)^(-k) e(n gz),
  with P_n = F_k(z, n, k/2);
* G_k(z, z0; m, l) = sum over Gamma of (Q_{m,l} |_k sigma_{z0}^{-1} g)(z) where
  Q_{m,l}(w) = w^m (conj(w)/(|w|^2 - 1))^l, with P_{z0,m} = G_k(z, z0; m, 0).

Every value comes with a tail majorant built from sum |cz + d|^(-kappa) over the
omitted cosets, plus a floating point rounding allowance.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .numerics import coeff_via_calE, eval_delta, tau

EPS = np.finfo(float).eps


class PolicyRejected(ValueError):
    """The tail estimate of a truncated series exceeds the requested tolerance."""


@dataclass(frozen=True)
class TruncationPolicy:
    c_max: int = 150          # Gamma_inf\Gamma sums: 1 <= c <= c_max
    d_factor: int = 150       # |d| <= d_factor * max(1, c)
    entry_max: int = 150      # full-group sums: max(|c|, |d|) <= entry_max
    t_max: int = 60           # translates per coset in full-group sums
    tolerance: float = 1e-10  # largest accepted absolute tail estimate

    def d_max(self, c: int) -> int:
        return self.d_factor * max(1, c)

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT_POLICY = TruncationPolicy()


@dataclass(frozen=True)
class CosetRep:
    """Representative (a b; c d) of Gamma_inf\\Gamma with bottom row (c, d)."""
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError("completion does not have determinant 1")
        if not ((self.c, self.d) == (0, 1) or (self.c >= 1 and math.gcd(self.c, self.d) == 1)):
            raise ValueError("bottom row is not a normalized coset representative")

    @staticmethod
    def complete(c: int, d: int) -> CosetRep:
        if (c, d) == (0, 1):
            return CosetRep(1, 0, 0, 1)
        a = pow(d, -1, c) if c > 1 else 0
        return CosetRep(a, (a * d - 1) // c, c, d)


@dataclass
class SeriesValue:
    value: complex
    tail: float        # majorant for the omitted terms
    terms: int
    abs_sum: float     # sum of |term| over the included terms

    @property
    def rounding(self) -> float:
        return self.terms * EPS * self.abs_sum

    @property
    def error_bound(self) -> float:
        return self.tail + self.rounding

    def __complex__(self):
        return complex(self.value)

    def scaled(self, factor) -> SeriesValue:
        f = abs(factor)
        return SeriesValue(self.value * factor, self.tail * f, self.terms, self.abs_sum * f)


def _combine(parts: list[tuple[complex, SeriesValue]]) -> SeriesValue:
    val = sum(w * p.value for w, p in parts)
    tail = sum(abs(w) * p.tail for w, p in parts)
    terms = sum(p.terms for _, p in parts)
    abs_sum = sum(abs(w) * p.abs_sum for w, p in parts)
    return SeriesValue(complex(val), tail, terms, abs_sum)


# ----------------------------------------------------------------------------
# coset enumeration


def _inverses(c: int) -> np.ndarray:
    inv = np.zeros(c, dtype=np.int64)
    for r in range(c):
        if math.gcd(r, c) == 1:
            inv[r] = pow(r, -1, c) if c > 1 else 0
    return inv


def _rows(c: int, d: np.ndarray):
    d = d[np.gcd(d, c) == 1]
    a = _inverses(c)[d % c]
    b = (a * d - 1) // c
    return a, b, np.full_like(d, c), d


def _stack(parts):
    return tuple(np.concatenate([p[i] for p in parts]) for i in range(4))


@lru_cache(maxsize=4)
def parabolic_cosets(c_max: int, d_factor: int):
    """(a, b, c, d) arrays for (0, 1) and all coprime c >= 1, |d| <= d_factor * c."""
    parts = [(np.array([1]), np.array([0]), np.array([0]), np.array([1]))]
    for c in range(1, c_max + 1):
        D = d_factor * c
        parts.append(_rows(c, np.arange(-D, D + 1, dtype=np.int64)))
    return _stack(parts)


@lru_cache(maxsize=4)
def group_cosets(entry_max: int):
    """Coset representatives with max(|c|, |d|) <= entry_max (bottom rows up to sign)."""
    parts = [(np.array([1]), np.array([0]), np.array([0]), np.array([1]))]
    d = np.arange(-entry_max, entry_max + 1, dtype=np.int64)
    for c in range(1, entry_max + 1):
        parts.append(_rows(c, d))
    return _stack(parts)


def coset_reps(policy: TruncationPolicy = DEFAULT_POLICY, limit: int | None = None):
    """Yield CosetRep objects in enumeration order (for inspection and tests)."""
    a, b, c, d = parabolic_cosets(policy.c_max, policy.d_factor)
    n = len(a) if limit is None else min(limit, len(a))
    for i in range(n):
        yield CosetRep(int(a[i]), int(b[i]), int(c[i]), int(d[i]))


# ----------------------------------------------------------------------------
# tail majorants


def _B(kappa: float) -> float:
    """integral over R of (1 + u^2)^(-kappa/2)."""
    return math.sqrt(math.pi) * math.exp(math.lgamma((kappa - 1) / 2) - math.lgamma(kappa / 2))


def majorant(kappa: float, z: complex, c_max: int, d_max) -> float:
    """Upper bound for sum |cz + d|^(-kappa) over coprime c >= 1 outside the box
    c <= c_max, |d| <= d_max(c)."""
    if kappa <= 2:
        raise ValueError("majorant needs kappa > 2")
    x, y = abs(z.real), z.imag
    C = c_max
    total = 2 * y ** -kappa * C ** (1 - kappa) / (kappa - 1) \
        + _B(kappa) * y ** (1 - kappa) * C ** (2 - kappa) / (kappa - 2)
    for c in range(1, C + 1):
        u = d_max(c) - c * x
        if u <= 1:
            return math.inf
        total += 2 * (u ** -kappa + u ** (1 - kappa) / (kappa - 1))
    return total


def _check(sv: SeriesValue, policy: TruncationPolicy) -> SeriesValue:
    if not sv.tail <= policy.tolerance:
        raise PolicyRejected(f"tail estimate {sv.tail:.3e} exceeds tolerance {policy.tolerance:.1e}")
    return sv


# ----------------------------------------------------------------------------
# parabolic series


def fks(k: int, z, n: int, s, policy: TruncationPolicy = DEFAULT_POLICY,
        completion_shift: int = 0) -> SeriesValue:
    """F_k(z, n, s), truncated to the policy's box of cosets.

    completion_shift replaces each completion (a, b) by (a + t c, b + t d); the
    value must not change since only g z mod 1 enters.
    """
    z = complex(z)
    s = complex(s)
    if not s.real > 1 or n < 1:
        raise ValueError("need Re(s) > 1 and n >= 1")
    a, b, c, d = parabolic_cosets(policy.c_max, policy.d_factor)
    a = a + completion_shift * c
    b = b + completion_shift * d
    y = z.imag
    j = c * z + d
    with np.errstate(divide="ignore", invalid="ignore"):
        gz = np.where(c == 0, z + b, a / np.where(c == 0, 1, c) - 1 / (np.where(c == 0, 1, c) * j))
    im = y / np.abs(j) ** 2
    terms = im ** (s - k / 2) * j ** (-k) * np.exp(2j * np.pi * n * gz)
    tail = y ** (s.real - k / 2) * majorant(2 * s.real, z, policy.c_max, policy.d_max)
    sv = SeriesValue(complex(np.sum(terms)), tail, len(terms), float(np.sum(np.abs(terms))))
    return _check(sv, policy)


def parabolic_poincare(m: int, z, k: int = 12, policy: TruncationPolicy = DEFAULT_POLICY) -> SeriesValue:
    """P_m(z) of weight k; F_k(z, m, k/2)."""
    if k < 12 or k % 2:
        raise ValueError("k must be even and at least 12")
    return fks(k, z, m, k / 2, policy)


# ----------------------------------------------------------------------------
# elliptic series over the full group


def _sigma_inv_images(z: complex, z0: complex, policy: TruncationPolicy):
    """g z for every group element in the truncated box, as (gz, j(g, z), a', b', c, d).

    The translates of each coset are centred so that Re(gz) is near Re(z0).
    """
    a, b, c, d = group_cosets(policy.entry_max)
    j = c * z + d
    g0 = (a * z + b) / j
    t0 = -np.round(g0.real - z0.real).astype(np.int64)
    T = np.arange(-policy.t_max, policy.t_max + 1, dtype=np.int64)
    t = t0[:, None] + T[None, :]
    gz = g0[:, None] + t
    ap = a[:, None] + t * c[:, None]
    bp = b[:, None] + t * d[:, None]
    return gz, j[:, None], ap, bp, c[:, None], d[:, None], t0


def _group_tail(k: int, l: int, z: complex, z0: complex, j: np.ndarray, policy) -> float:
    beta = z0.imag
    kap = k - 2 * l
    if kap <= 2:
        return math.inf
    const = (2 * beta) ** (k / 2) * (4 * beta * z.imag) ** (-l)
    T = policy.t_max
    # translates beyond the window, for the cosets that are included
    trans = 2 * (T - 0.5) ** (1 - kap) / (kap - 1)
    inc = float(np.sum(np.abs(j[:, 0]) ** (-kap)))
    # cosets outside the box, with every translate
    per_coset = 2 * beta ** (-kap) + beta ** (1 - kap) * _B(kap)
    exc = majorant(kap, z, policy.entry_max, lambda c: policy.entry_max)
    return const * (inc * trans + exc * per_coset)


def gk(k: int, z, z0, m: int, l: int, policy: TruncationPolicy = DEFAULT_POLICY,
       route: str = "gk") -> SeriesValue:
    """G_k(z, z0; m, l), summed over the whole group.

    route "gk" evaluates (Q_{m,l} |_k sigma_{z0}^{-1} g)(z) through w = sigma_{z0}^{-1} g z;
    route "sum2" forms M = sigma_{z0}^{-1} g sigma_z and uses its entries b/d and d.
    Both signs of each matrix are counted by doubling (k is even).
    """
    z, z0 = complex(z), complex(z0)
    if k % 2 or k < 4:
        raise ValueError("k must be even and at least 4")
    if not (0 <= l < k / 2 - 2) or m < 0:
        raise ValueError("need m >= 0 and 0 <= l < k/2 - 2 for absolute convergence")
    gz, j, ap, bp, c, d, _ = _sigma_inv_images(z, z0, policy)
    beta = z0.imag
    if route == "gk":
        num = gz - z0
        den = gz - z0.conjugate()
        w = num / den
        jt = den * j
        pref = (2j * beta) ** (k / 2)
    elif route == "sum2":
        zz = z - z.conjugate()
        Mb = ((ap - z0 * c) * z + (bp - z0 * d)) / zz
        Md = ((ap - z0.conjugate() * c) * z + (bp - z0.conjugate() * d)) / zz
        w = Mb / Md
        jt = Md
        pref = (z0 - z0.conjugate()) ** (k / 2) / zz ** k
    else:
        raise ValueError(f"unknown route {route!r}")
    aw2 = np.abs(w) ** 2
    terms = w ** m * np.conj(w) ** l / (aw2 - 1) ** l / jt ** k
    terms = 2 * pref * terms
    tail = _group_tail(k, l, z, z0, j, policy)
    sv = SeriesValue(complex(np.sum(terms)), tail, terms.size, float(np.sum(np.abs(terms))))
    return _check(sv, policy)


def elliptic_poincare(z0, m: int, z, k: int = 12, policy: TruncationPolicy = DEFAULT_POLICY) -> SeriesValue:
    """P_{z0,m}(z) = G_k(z, z0; m, 0)."""
    if k < 12 or k % 2:
        raise ValueError("k must be even and at least 12")
    return gk(k, z, z0, m, 0, policy)


# ----------------------------------------------------------------------------
# Petersson norm of Delta


def _gl(n: int, lo, hi):
    x, w = np.polynomial.legendre.leggauss(n)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    half = (hi - lo) / 2
    return (lo[..., None] + half[..., None] * (x + 1)), half[..., None] * w


Y_CUT = 8.0
_Y_BREAKS = (1.5, 2.5, 4.0, 5.5, Y_CUT)


def _norm_quad(n: int) -> float:
    """2 * int_0^(1/2) int_(sqrt(1-x^2))^(Y_CUT) |Delta|^2 y^10 dy dx with n-point rules."""
    X, WX = _gl(n, 0.0, 0.5)
    X, WX = X.ravel(), WX.ravel()
    total = 0.0
    lows = np.sqrt(1 - X ** 2)
    bounds = [lows] + [np.full_like(X, b) for b in _Y_BREAKS]
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        Y, WY = _gl(n, lo, hi)
        Z = X[:, None] + 1j * Y
        f = np.abs(eval_delta(Z)) ** 2 * Y ** 10
        total += float(np.sum(WX * np.sum(WY * f, axis=1)))
    return 2 * total


def norm_tail_above(Y: float = Y_CUT) -> float:
    """Bound on the part of the integral above y = Y (|Delta(z)| <= 1.01 e^(-2 pi y) there)."""
    # int_Y^inf y^10 e^(-4 pi y) dy <= Y^10 e^(-4 pi Y) / (4 pi - 10 / Y)
    return 1.01 ** 2 * Y ** 10 * math.exp(-4 * math.pi * Y) / (4 * math.pi - 10 / Y)


@lru_cache(maxsize=4)
def petersson_norm_delta(tolerance: float = 1e-12, n_start: int = 16, n_max: int = 256) -> float:
    """||Delta||^2 = int_F |Delta|^2 y^12 dx dy / y^2, refined until successive values agree."""
    prev = _norm_quad(n_start)
    n = n_start
    while n < n_max:
        n *= 2
        cur = _norm_quad(n)
        if abs(cur - prev) <= tolerance * abs(cur):
            return cur + norm_tail_above()
        prev = cur
    raise ArithmeticError("quadrature did not reach the requested tolerance")


# ----------------------------------------------------------------------------
# identities in weight 12


@dataclass
class AverageReport:
    kind: str
    lhs: complex
    rhs: complex
    rel_err: float
    tail_bound: float
    policy: dict
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def cx(v):
            return [float(np.real(v)), float(np.imag(v))]
        return {"kind": self.kind, "lhs": cx(self.lhs), "rhs": cx(self.rhs),
                "rel_err": self.rel_err, "tail_bound": self.tail_bound,
                "policy": self.policy, "details": self.details}


def _rel(a: complex, b: complex) -> float:
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale else 0.0


def ppe_rhs(z0, m: int, n: int, norm2: float, policy: TruncationPolicy = DEFAULT_POLICY) -> SeriesValue:
    """(64/10!) ||Delta||^2 beta^(m+6) sum_j binom(m+11, m-j) (-4 pi n)^(j+11)/j! F_{2m+12}(z0, n, j+6)."""
    z0 = complex(z0)
    beta = z0.imag
    parts = []
    for j in range(m + 1):
        w = math.comb(m + 11, m - j) * (-4 * math.pi * n) ** (j + 11) / math.factorial(j)
        parts.append((w, fks(2 * m + 12, z0, n, j + 6, policy)))
    return _combine(parts).scaled(64 / math.factorial(10) * norm2 * beta ** (m + 6))


def verify_parabolic_elliptic(z0, m: int, n: int, policy: TruncationPolicy = DEFAULT_POLICY) -> AverageReport:
    """tau(n) c_{z0}(Delta, m) against the F-series expression."""
    z0 = complex(z0)
    norm2 = petersson_norm_delta()
    lhs = tau(n) * coeff_via_calE(z0, m)
    rhs = ppe_rhs(z0, m, n, norm2, policy)
    return AverageReport("parabolic-elliptic", lhs, rhs.value, _rel(lhs, rhs.value), rhs.error_bound,
                         policy.to_dict(), {"z0": [z0.real, z0.imag], "m": m, "n": n, "norm2": norm2})


def elpeter_rhs(z0, z0p, m: int, n: int, policy: TruncationPolicy = DEFAULT_POLICY, k: int = 12,
                route: str = "gk") -> SeriesValue:
    z0, z0p = complex(z0), complex(z0p)
    pref = 2 ** (k - 3) * math.factorial(m + k - 1) * (z0p - z0p.conjugate()) ** (n + k // 2) \
        / (math.pi * math.factorial(m) * math.factorial(k - 2))
    parts = []
    for j in range(min(m, n) + 1):
        w = math.comb(m, j) * math.comb(n + k - 1, n - j)
        parts.append((w, gk(k + 2 * n, z0p, z0, m - j, n - j, policy, route)))
    return _combine(parts).scaled(pref)


def verify_elliptic_elliptic(z0, z0p, m: int, n: int, policy: TruncationPolicy = DEFAULT_POLICY) -> AverageReport:
    """conj(c_{z0}(Delta, m)) c_{z0'}(Delta, n) / ||Delta||^2 against the G-series expression."""
    z0, z0p = complex(z0), complex(z0p)
    norm2 = petersson_norm_delta()
    lhs = np.conj(coeff_via_calE(z0, m)) * coeff_via_calE(z0p, n) / norm2
    rhs = elpeter_rhs(z0, z0p, m, n, policy)
    return AverageReport("elliptic-elliptic", complex(lhs), rhs.value, _rel(lhs, rhs.value),
                         rhs.error_bound, policy.to_dict(),
                         {"z0": [z0.real, z0.imag], "z0p": [z0p.real, z0p.imag], "m": m, "n": n,
                          "norm2": norm2})


def vanishing_criterion(z0, m: int, policy: TruncationPolicy = DEFAULT_POLICY, route: str = "sum2") -> dict:
    """sum_j binom(m, j) binom(m+11, j) G_{2m+12}(z0, z0; j, j), which vanishes iff P_{z0,m} does."""
    z0 = complex(z0)
    parts = []
    for j in range(m + 1):
        parts.append((math.comb(m, j) * math.comb(m + 11, j), gk(2 * m + 12, z0, z0, j, j, policy, route)))
    total = _combine(parts)
    scale = sum(abs(w * p.value) for w, p in parts)
    return {"value": total.value, "error_bound": total.error_bound, "scale": scale,
            "within_bound": abs(total.value) <= total.error_bound}


def coeff_of_elliptic_at_infty(z0, m: int, n: int, k: int = 12, policy: TruncationPolicy = DEFAULT_POLICY,
                               route: str = "F") -> SeriesValue:
    """c_inf(P_{z0,m}, n), the n-th q-expansion coefficient of the elliptic series.

    route "F" sums F_{k+2m}(z0, n, k/2 + j); route "lattice" sums
    a^(m-j) c^(-k-m-j) e(n d/c) over (a b; c d) = sigma_{z0}^{-1} g, g in Gamma/Gamma_inf.
    """
    z0 = complex(z0)
    if n <= 0:
        return SeriesValue(0j, 0.0, 0, 0.0)
    beta = z0.imag
    if route == "F":
        parts = []
        for j in range(m + 1):
            w = math.comb(m, j) * (-4 * math.pi * n) ** (k + j) / math.factorial(j + k - 1)
            parts.append((w, fks(k + 2 * m, z0, n, k / 2 + j, policy)))
        pref = 2 * beta ** (m + k / 2) / (n * (-2j) ** (k // 2))
        sv = _combine(parts).scaled(pref)
        return SeriesValue(sv.value.conjugate(), sv.tail, sv.terms, sv.abs_sum)
    if route != "lattice":
        raise ValueError(f"unknown route {route!r}")
    # first columns (alpha, gamma) of g run over primitive vectors up to sign
    a0, b0, c0, d0 = parabolic_cosets(policy.c_max, policy.d_factor)
    alpha, gam, bet, delt = d0, c0, b0, a0
    A = alpha - z0 * gam
    C = alpha - z0.conjugate() * gam
    Dd = bet - z0.conjugate() * delt
    phase = np.exp(2j * np.pi * n * Dd / C)
    parts = []
    for j in range(m + 1):
        w = beta ** (k / 2 + j) * math.comb(m, j) * (-4 * math.pi * n) ** (k + j) / math.factorial(k + j - 1)
        terms = A ** (m - j) / C ** (k + m + j) * phase
        # |A| = |C| and |phase| <= 1, so each term is at most |C|^(-k-2j)
        tail = _lattice_tail(k + 2 * j, z0, policy)
        parts.append((w, SeriesValue(complex(np.sum(terms)), tail, terms.size, float(np.sum(np.abs(terms))))))
    sv = _combine(parts).scaled(2 / (n * (2j) ** (k // 2)))
    return _check(sv, policy)


def _lattice_tail(kappa: int, z0: complex, policy: TruncationPolicy) -> float:
    """Majorant for sum |alpha - conj(z0) gamma|^(-kappa) over omitted primitive (gamma, alpha).

    |alpha - conj(z0) gamma| = |gamma conj(z0) - alpha| = |gamma (-z0) + alpha| up to
    conjugation, which is |c z + d| at z = -conj(z0) with (c, d) = (gamma, alpha)."""
    return majorant(kappa, -z0.conjugate(), policy.c_max, policy.d_max)


def fourier_coefficient_numeric(z0, m: int, n: int, y: float = 1.0, samples: int = 32,
                                policy: TruncationPolicy | None = None) -> complex:
    """c_inf(P_{z0,m}, n) from int P_{z0,m}(x + iy) e(-n x) dx e^(2 pi n y) over one period (trapezoid rule).

    The period is taken as [-1/2, 1/2) so that every sample lies in the strip the tail majorant expects.
    """
    policy = policy or TruncationPolicy(entry_max=60, t_max=40, tolerance=1e-6)
    xs = np.arange(samples) / samples - 0.5
    vals = np.array([elliptic_poincare(z0, m, complex(x, y), 12, policy).value for x in xs])
    return complex(np.mean(vals * np.exp(-2j * np.pi * n * xs)) * math.exp(2 * math.pi * n * y))
