"""CM points of class number at most two with K = Q, Q(sqrt 2) or Q(sqrt 5).

For each discriminant the table stores k0..k3 with

    E2*(z) = k1 |D|^(-1/2) Omega^2,   Q(z) = k2 Omega^4,   R(z) = k3 |D|^(1/2) Omega^6,

together with m1 = k0^2 k1 k2 and m2 = k0^2 |D| k3 after removing their
common integer factor.  The numeric tests re-derive every row from q-series,
so a transcription slip in this table cannot go unnoticed.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from math import gcd

import mpmath
from sympy.functions.combinatorial.numbers import kronecker_symbol

from .exactalg import QSQRT2, QSQRT5, RATIONAL, FieldSpec, KElt, QuadElt

DISCRIMINANTS = (-3, -4, -7, -8, -11, -15, -19, -20, -24)


@dataclass(frozen=True)
class CMPointSpec:
    D: int
    field: FieldSpec
    k0: int
    k1: KElt
    k2: KElt
    k3: KElt
    m1: QuadElt | None
    m2: QuadElt | None
    class_number: Fraction
    elliptic_order: int
    notes: tuple[str, ...] = dc_field(default=())

    @property
    def zD(self) -> complex:
        r = abs(self.D) ** 0.5
        return complex(0, r / 2) if self.D % 2 == 0 else complex(0.5, r / 2)

    def zD_mp(self):
        r = mpmath.sqrt(abs(self.D))
        return mpmath.mpc(0, r / 2) if self.D % 2 == 0 else mpmath.mpc(mpmath.mpf(1) / 2, r / 2)

    @property
    def is_elliptic(self) -> bool:
        return self.D in (-3, -4)

    def with_overrides(self, **kw) -> CMPointSpec:
        """Copy with some constants replaced (used for negative controls)."""
        data = {f: getattr(self, f) for f in self.__dataclass_fields__}
        data.update(kw)
        return CMPointSpec(**data)


def _k(a, b=0, f: FieldSpec = RATIONAL) -> KElt:
    return KElt(Fraction(a), Fraction(b), f)


def _row(D, f, k1, k2, k3, m1, m2, h, notes=()):
    return CMPointSpec(D, f, 1, k1, k2, k3,
                       QuadElt(*m1, f) if m1 else None, QuadElt(*m2, f) if m2 else None,
                       Fraction(h), {-3: 3, -4: 2}.get(D, 1), tuple(notes))


_REGISTRY = {
    -3: _row(-3, RATIONAL, _k(0), _k(0), _k(24), None, None, Fraction(1, 3)),
    -4: _row(-4, RATIONAL, _k(0), _k(12), _k(0), None, None, Fraction(1, 2)),
    -7: _row(-7, RATIONAL, _k(3), _k(15), _k(27), (5, 0), (21, 0), 1),
    -8: _row(-8, RATIONAL, _k(4), _k(20), _k(28), (5, 0), (14, 0), 1),
    -11: _row(-11, RATIONAL, _k(8), _k(32), _k(56), (32, 0), (77, 0), 1),
    # 42 + 63/sqrt5 = 42 + (63/5) sqrt5
    -15: _row(-15, QSQRT5, _k(6, 3, QSQRT5), _k(15, 12, QSQRT5), _k(42, Fraction(63, 5), QSQRT5),
              (30, 13), (70, 21), 2,
              ("m1 = k1 k2 / 9 = 30+13*sqrt5",)),
    -19: _row(-19, RATIONAL, _k(24), _k(96), _k(216), (32, 0), (57, 0), 1),
    # 72 + 112/sqrt5 = 72 + (112/5) sqrt5
    -20: _row(-20, QSQRT5, _k(12, 4, QSQRT5), _k(40, 12, QSQRT5), _k(72, Fraction(112, 5), QSQRT5),
              (45, 19), (90, 28), 2),
    -24: _row(-24, QSQRT2, _k(12, 12, QSQRT2), _k(60, 24, QSQRT2), _k(84, 72, QSQRT2),
              (9, 7), (14, 12), 2),
}


def registry(D: int) -> CMPointSpec:
    try:
        return _REGISTRY[D]
    except KeyError:
        raise KeyError(f"no CM data for discriminant {D}; known: {DISCRIMINANTS}") from None


def all_specs() -> list[CMPointSpec]:
    return [_REGISTRY[D] for D in DISCRIMINANTS]


def derived_m1_m2(spec: CMPointSpec) -> tuple[QuadElt, QuadElt, int]:
    """(m1, m2, g) computed from k0..k3, where g is the removed common factor."""
    f = spec.field
    x = spec.k1 * spec.k2 * (spec.k0 ** 2)
    y = spec.k3 * abs(spec.D) * (spec.k0 ** 2)
    x, y = x.to_quad(), y.to_quad()
    g = gcd(x.content(), y.content())
    if g == 0:
        raise ValueError("m1 and m2 are undefined at this point")
    return QuadElt(x.a // g, x.b // g, f), QuadElt(y.a // g, y.b // g, f), g


# ----------------------------------------------------------------------------
# periods and normalisation


def chowla_selberg(D: int, precision: int = 30):
    """Omega_D = (2 pi |D|)^(-1/2) [prod_j Gamma(j/|D|)^(D|j)]^(1/(2h)).

    h is replaced by 1/3 and 1/2 for D = -3 and D = -4.  Returns an mpmath
    number computed with `precision` decimal digits.
    """
    spec = registry(D)
    N = abs(D)
    with mpmath.workdps(precision + 10):
        logprod = mpmath.mpf(0)
        for j in range(1, N):
            chi = kronecker_symbol(D, j)
            if chi:
                logprod += chi * mpmath.log(mpmath.gamma(mpmath.mpf(j) / N))
        h = mpmath.mpf(spec.class_number.numerator) / spec.class_number.denominator
        omega = mpmath.exp(logprod / (2 * h)) / mpmath.sqrt(2 * mpmath.pi * N)
    return +omega


def delta_mp(z, precision: int = 30):
    """Delta(z) = q prod (1 - q^n)^24 in mpmath, for Im z bounded away from 0."""
    with mpmath.workdps(precision + 10):
        z = mpmath.mpc(z)
        q = mpmath.exp(2j * mpmath.pi * z)
        prod = mpmath.mpf(1)
        qn = q
        eps = mpmath.mpf(10) ** (-(precision + 10))
        while abs(qn) > eps:
            prod *= (1 - qn) ** 24
            qn *= q
        return +(q * prod)


@dataclass(frozen=True)
class Normalization:
    kappa: object   # mpmath mpc
    lam: object     # mpmath mpc
    omega: object   # mpmath mpf

    @property
    def kappa_c(self) -> complex:
        return complex(self.kappa)

    @property
    def lambda_c(self) -> complex:
        return complex(self.lam)


def normalization(spec: CMPointSpec, precision: int = 30) -> Normalization:
    """kappa = -|D|^3 Delta(z) and lambda with c_z(Delta, m) = kappa lambda^m q_m(0) / m!."""
    with mpmath.workdps(precision + 10):
        omega = chowla_selberg(spec.D, precision + 10)
        N = abs(spec.D)
        if spec.D == -4:
            delta = omega ** 12
            lam = -2 * mpmath.pi * omega ** 2 / mpmath.sqrt(3)
        elif spec.D == -3:
            delta = -omega ** 12
            lam = -mpmath.pi * omega ** 2
        else:
            delta = delta_mp(spec.zD_mp(), precision + 10)
            k0 = spec.k0
            denom = 6 * k0 ** 4 * (spec.k2 * spec.k2).to_mpf(mpmath) * spec.m2.to_kelt().to_mpf(mpmath)
            lam = -mpmath.pi * omega ** 2 / denom
        kappa = -(N ** 3) * mpmath.mpc(delta)
        return Normalization(+kappa, +mpmath.mpc(lam), +omega)


def nontrivial_indices(spec: CMPointSpec):
    """Predicate n -> whether c_z(Delta, n) is not forced to vanish (n = 0 mod N)."""
    N = spec.elliptic_order
    return lambda n: n % N == 0


def table_rows(precision: int = 15) -> list[dict]:
    """The registry as JSON-friendly dictionaries."""
    rows = []
    for spec in all_specs():
        def kpair(x: KElt):
            return [str(x.a), str(x.b)]
        rows.append({
            "disc": spec.D,
            "field": spec.field.name,
            "class_number": str(spec.class_number),
            "elliptic_order": spec.elliptic_order,
            "k0": spec.k0,
            "k1": kpair(spec.k1), "k2": kpair(spec.k2), "k3": kpair(spec.k3),
            "m1": list(spec.m1.pair()) if spec.m1 else None,
            "m2": list(spec.m2.pair()) if spec.m2 else None,
            "omega": mpmath.nstr(chowla_selberg(spec.D, precision + 5), precision),
        })
    return rows
