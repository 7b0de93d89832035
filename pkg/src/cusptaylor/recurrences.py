"""Exact recursions: the bivariate B_n(Q, R), p_n(t), q_n(t) and the CM-point q_{n,z}(t).

All of them are driven by the same three-term rule

    q_{n+1} = (a1 + n a2) q_n + a3 q_n' + n(n+11) a4 q_{n-1},   q_0 = 1,

with polynomial coefficients a1..a4 over Z[sqrt d].
"""
from __future__ import annotations

from collections import defaultdict
from fractions import Fraction
from functools import lru_cache
from typing import Iterator

import numpy as np

from .exactalg import RATIONAL, FieldSpec, KElt, QuadElt, TruncPoly

# ----------------------------------------------------------------------------
# polynomials in Q = E4 and R = E6


class QRPoly:
    """Polynomial in Q and R, stored as {(power of R, power of Q): coefficient}."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        clean = {}
        for key, c in (terms or {}).items():
            if c != 0:
                c = Fraction(c)
                clean[(int(key[0]), int(key[1]))] = int(c) if c.denominator == 1 else c
        self.terms = clean

    @staticmethod
    def const(c) -> QRPoly:
        return QRPoly({(0, 0): c})

    @staticmethod
    def Q() -> QRPoly:
        return QRPoly({(0, 1): 1})

    @staticmethod
    def R() -> QRPoly:
        return QRPoly({(1, 0): 1})

    def __add__(self, other: QRPoly) -> QRPoly:
        out = defaultdict(int, self.terms)
        for k, c in other.terms.items():
            out[k] += c
        return QRPoly(out)

    def __sub__(self, other: QRPoly) -> QRPoly:
        return self + other.scale(-1)

    def scale(self, c) -> QRPoly:
        return QRPoly({k: c * v for k, v in self.terms.items()})

    def __mul__(self, other) -> QRPoly:
        if not isinstance(other, QRPoly):
            return self.scale(other)
        out = defaultdict(int)
        for (a1, b1), c1 in self.terms.items():
            for (a2, b2), c2 in other.terms.items():
                out[(a1 + a2, b1 + b2)] += c1 * c2
        return QRPoly(out)

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, QRPoly) and self.terms == other.terms

    def weights(self) -> set[int]:
        return {6 * a + 4 * b for a, b in self.terms}

    def is_homogeneous(self, weight: int | None = None) -> bool:
        w = self.weights()
        if not w:
            return True
        return len(w) == 1 and (weight is None or w == {weight})

    def is_integral(self) -> bool:
        return all(isinstance(c, int) for c in self.terms.values())

    def evaluate(self, Q, R):
        """Evaluate at numbers (or numpy arrays) Q and R."""
        total = 0
        for (a, b), c in self.terms.items():
            total = total + float(c) * (R ** a) * (Q ** b)
        return total

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for (a, b), c in sorted(self.terms.items()):
            mono = "*".join(s for s in (f"R^{a}" if a else "", f"Q^{b}" if b else "") if s)
            parts.append(f"{c}" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)


def theta_action(p: QRPoly, weight: int | None = None) -> QRPoly:
    """Apply the derivation -R/3 d/dQ - Q^2/2 d/dR (Serre derivative on Q, R)."""
    if not p.is_homogeneous(weight):
        raise ValueError("theta_action expects a homogeneous polynomial of the given weight")
    out = defaultdict(Fraction)
    for (a, b), c in p.terms.items():
        if b:
            out[(a + 1, b - 1)] += Fraction(-b, 3) * c
        if a:
            out[(a - 1, b + 2)] += Fraction(-a, 2) * c
    return QRPoly(out)


@lru_cache(maxsize=None)
def _bseq_table(n: int) -> tuple[QRPoly, ...]:
    table = [QRPoly.const(1), QRPoly()]
    Q = QRPoly.Q()
    for k in range(1, n):
        nxt = theta_action(table[k]).scale(12) - (Q * table[k - 1]).scale(k * (k + 11))
        table.append(nxt)
    return tuple(table[: n + 1])


def bseq(n: int) -> QRPoly:
    """B_n with B_0 = 1, B_1 = 0, B_{n+1} = 12 theta B_n - n(n+11) Q B_{n-1}."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return _bseq_table(max(n, 1))[n]


# ----------------------------------------------------------------------------
# polynomials in t over Z[sqrt d]


class QuadPoly:
    """Polynomial sum (a_i + b_i sqrt d) t^i with arbitrary precision integers."""

    __slots__ = ("a", "b", "field")

    def __init__(self, a, b=None, field: FieldSpec = RATIONAL):
        a = [int(x) for x in a]
        b = [0] * len(a) if b is None else [int(x) for x in b]
        n = max(len(a), len(b))
        a += [0] * (n - len(a))
        b += [0] * (n - len(b))
        while n and a[n - 1] == 0 and b[n - 1] == 0:
            n -= 1
        self.a = tuple(a[:n])
        self.b = tuple(b[:n])
        self.field = field
        if field.is_rational and any(self.b):
            raise ValueError("rational polynomial with sqrt coefficients")

    @staticmethod
    def from_elts(elts, field: FieldSpec) -> QuadPoly:
        elts = [QuadElt(e, 0, field) if isinstance(e, int) else e for e in elts]
        return QuadPoly([e.a for e in elts], [e.b for e in elts], field)

    @staticmethod
    def const(c, field: FieldSpec = RATIONAL) -> QuadPoly:
        if isinstance(c, QuadElt):
            return QuadPoly([c.a], [c.b], field)
        return QuadPoly([c], None, field)

    @property
    def degree(self) -> int:
        return len(self.a) - 1

    def coeff(self, i: int) -> QuadElt:
        if i >= len(self.a):
            return QuadElt(0, 0, self.field)
        return QuadElt(self.a[i], self.b[i], self.field)

    def coeffs(self) -> list[QuadElt]:
        return [self.coeff(i) for i in range(len(self.a))]

    def int_coeffs(self) -> list[int]:
        if any(self.b):
            raise ValueError("polynomial has irrational coefficients")
        return list(self.a)

    def constant(self) -> QuadElt:
        return self.coeff(0)

    def is_zero(self) -> bool:
        return not self.a

    def _c(self, other) -> QuadPoly:
        if isinstance(other, QuadPoly):
            if other.field != self.field:
                raise ValueError("field mismatch")
            return other
        return QuadPoly.const(other, self.field)

    def __add__(self, other):
        o = self._c(other)
        n = max(len(self.a), len(o.a))
        pa = self.a + (0,) * (n - len(self.a))
        pb = self.b + (0,) * (n - len(self.b))
        qa = o.a + (0,) * (n - len(o.a))
        qb = o.b + (0,) * (n - len(o.b))
        return QuadPoly([x + y for x, y in zip(pa, qa)], [x + y for x, y in zip(pb, qb)], self.field)

    __radd__ = __add__

    def __neg__(self):
        return QuadPoly([-x for x in self.a], [-x for x in self.b], self.field)

    def __sub__(self, other):
        return self + (-self._c(other))

    def __mul__(self, other):
        if isinstance(other, int):
            return QuadPoly([other * x for x in self.a], [other * x for x in self.b], self.field)
        o = self._c(other)
        if not self.a or not o.a:
            return QuadPoly([], None, self.field)
        d = self.field.d
        n = len(self.a) + len(o.a) - 1
        ra = [0] * n
        rb = [0] * n
        for i, (xa, xb) in enumerate(zip(self.a, self.b)):
            if xa == 0 and xb == 0:
                continue
            for j, (ya, yb) in enumerate(zip(o.a, o.b)):
                ra[i + j] += xa * ya + d * xb * yb
                rb[i + j] += xa * yb + xb * ya
        return QuadPoly(ra, rb, self.field)

    __rmul__ = __mul__

    def derivative(self) -> QuadPoly:
        return QuadPoly([i * x for i, x in enumerate(self.a)][1:],
                        [i * x for i, x in enumerate(self.b)][1:], self.field)

    def __eq__(self, other):
        return isinstance(other, QuadPoly) and (self.a, self.b, self.field) == (other.a, other.b, other.field)

    def __hash__(self):
        return hash((self.a, self.b, self.field))

    def reduce(self, l: int) -> TruncPoly:
        n = min(len(self.a), l)
        c = np.zeros((2, l), dtype=np.int64)
        c[0, :n] = [x % l for x in self.a[:n]]
        c[1, :n] = [x % l for x in self.b[:n]]
        return TruncPoly(c, l, self.field)

    def __repr__(self):
        terms = []
        for i, e in enumerate(self.coeffs()):
            if not e.is_zero():
                terms.append(f"({e})" + (f"t^{i}" if i else ""))
        return " + ".join(terms) or "0"


# IntPoly is simply a QuadPoly over Q
IntPoly = QuadPoly


class RecurrenceCoeffs:
    """The four coefficient polynomials a1..a4 of a three-term recursion."""

    def __init__(self, a1: QuadPoly, a2: QuadPoly, a3: QuadPoly, a4: QuadPoly):
        fields = {a.field for a in (a1, a2, a3, a4)}
        if len(fields) != 1:
            raise ValueError("coefficients live in different fields")
        self.a1, self.a2, self.a3, self.a4 = a1, a2, a3, a4
        self.field = fields.pop()

    def as_tuple(self):
        return (self.a1, self.a2, self.a3, self.a4)

    def step(self, prev: QuadPoly, curr: QuadPoly, n: int) -> QuadPoly:
        """q_{n+1} from q_{n-1} and q_n."""
        nxt = (self.a1 + self.a2 * n) * curr + self.a3 * curr.derivative()
        if n:
            nxt = nxt + (self.a4 * prev) * (n * (n + 11))
        return nxt

    def stream(self) -> Iterator[QuadPoly]:
        """q_0, q_1, q_2, ...; only the last two terms are kept in memory."""
        prev = QuadPoly([], None, self.field)
        curr = QuadPoly.const(1, self.field)
        n = 0
        while True:
            yield curr
            prev, curr = curr, self.step(prev, curr, n)
            n += 1

    def nth(self, n: int) -> QuadPoly:
        for i, q in enumerate(self.stream()):
            if i == n:
                return q

    def first(self, count: int) -> list[QuadPoly]:
        out = []
        for q in self.stream():
            if len(out) == count:
                break
            out.append(q)
        return out


def _ip(coeffs) -> QuadPoly:
    return QuadPoly(coeffs)


# specialisations at i and at omega
COEFFS_AT_I = RecurrenceCoeffs(_ip([]), _ip([0, -2]), _ip([-6, 0, 6]), _ip([-1]))
COEFFS_AT_OMEGA = RecurrenceCoeffs(_ip([]), _ip([0, 0, -2]), _ip([-4, 0, 0, 4]), _ip([0, -1]))


def pseq(n: int) -> QuadPoly:
    """p_n(t): p_{n+1} = -2nt p_n + 6(t^2-1)p_n' - n(n+11)p_{n-1}."""
    return COEFFS_AT_I.nth(n)


def qseq_omega(n: int) -> QuadPoly:
    """q_n(t): q_{n+1} = -2nt^2 q_n + 4(t^3-1)q_n' - n(n+11)t q_{n-1}."""
    return COEFFS_AT_OMEGA.nth(n)


def general_pseq_coeffs(m1: QuadElt, m2: QuadElt) -> RecurrenceCoeffs:
    """Coefficients of the p_n recursion attached to the constants m1, m2."""
    f = m1.field
    zero = QuadElt(0, 0, f)
    a1 = QuadPoly.from_elts([zero, m1 * 12], f)
    a2 = QuadPoly.from_elts([zero, (m1 - m2) * 2], f)
    a3 = QuadPoly.from_elts([m2 * -6, zero, m2 * 6], f)
    a4 = QuadPoly.from_elts([-(m2 * (m2 - m1 * 6)), zero, -(m1 * m2 * 4 + m1 * m1)], f)
    return RecurrenceCoeffs(a1, a2, a3, a4)


def general_pseq(m1: QuadElt, m2: QuadElt, n: int) -> QuadPoly:
    """p_0 = 1, p_1 = 12 m1 t and the three-term rule with coefficients in m1, m2."""
    return general_pseq_coeffs(m1, m2).nth(n)


# ----------------------------------------------------------------------------
# coefficients for a CM point


def _kpoly_mul(p: list[KElt], q: list[KElt], field) -> list[KElt]:
    out = [KElt(0, 0, field) for _ in range(len(p) + len(q) - 1)]
    for i, x in enumerate(p):
        for j, y in enumerate(q):
            out[i + j] = out[i + j] + x * y
    return out


def _kpoly_to_quad(p: list[KElt], field) -> QuadPoly:
    return QuadPoly.from_elts([c.to_quad() for c in p], field)


def cm_recursion_coeffs(spec) -> RecurrenceCoeffs:
    """a1..a4 in O_K[t] for the CM point described by spec (see cmdata.registry)."""
    if spec.D == -4:
        return COEFFS_AT_I
    if spec.D == -3:
        return COEFFS_AT_OMEGA
    f = spec.field
    k0, k2, k3 = KElt.of(spec.k0, f), KElt.of(spec.k2, f), KElt.of(spec.k3, f)
    m1, m2 = KElt.of(spec.m1, f), KElt.of(spec.m2, f)
    D = abs(spec.D)
    lin = [k3, KElt(1, 0, f)]                       # t + k3
    sq = _kpoly_mul(lin, lin, f)                    # (t + k3)^2
    k04, k08 = k0 ** 4, k0 ** 8
    a1 = [c * (k04 * k2 * m1 * (12 * D)) for c in lin]
    a2 = [c * (k04 * k2 * (m1 - m2) * (2 * D)) for c in lin]
    a3 = [c * (k04 * m2 * k2 * (6 * D)) for c in sq]
    a3[0] = a3[0] - k04 * m2 * (k2 ** 4) * 6
    a4 = [c * (-(k08 * (k2 ** 2) * m1 * (m2 * 4 + m1) * (D * D))) for c in sq]
    a4[0] = a4[0] - k08 * (k2 ** 5) * m2 * (m2 - m1 * 6) * D
    return RecurrenceCoeffs(*(_kpoly_to_quad(p, f) for p in (a1, a2, a3, a4)))


def cm_qseq(spec, n: int) -> QuadPoly:
    """q_{n,z}(t) for the CM point spec, exactly."""
    return cm_recursion_coeffs(spec).nth(n)


def cm_qseq_stream(spec) -> Iterator[QuadPoly]:
    return cm_recursion_coeffs(spec).stream()


def cm_qseq_mod(spec, l: int, n_max: int) -> list[TruncPoly]:
    """The reduced polynomials q_n mod l in R_l for n = 0..n_max-1.

    Steps are taken directly in R_l with the index n reduced mod l, so the
    cost does not depend on coefficient growth.
    """
    from .periodicity import ModRecursion

    rec = ModRecursion(spec, l)
    return [TruncPoly(s, l, spec.field) for s in rec.iterate(n_max)]


def k00_link_holds(spec, n: int) -> bool:
    """Check q_n(t) = (k0^4 k2^2 s)^n p_n(s (t + k3) / k2^2) with s = sqrt(k2 |D|).

    p_n is the sequence attached to m1, m2.  Since p_n only has powers of t
    of the parity of n, every power of s that occurs is even and the identity
    holds in K[t] without ever forming s.
    """
    f = spec.field
    k0, k2, k3 = KElt.of(spec.k0, f), KElt.of(spec.k2, f), KElt.of(spec.k3, f)
    s2 = k2 * abs(spec.D)
    p = general_pseq(spec.m1, spec.m2, n)
    scale = (k0 ** 4 * k2 ** 2) ** n
    lin = [k3, KElt(1, 0, f)]
    power = [KElt(1, 0, f)]
    total = defaultdict(lambda: KElt(0, 0, f))
    for i, c in enumerate(p.coeffs()):
        if i:
            power = _kpoly_mul(power, lin, f)
        if c.is_zero():
            continue
        if (n + i) % 2:
            return False
        factor = KElt.of(c, f) * scale * s2 ** ((n + i) // 2) / (k2 ** (2 * i))
        for j, x in enumerate(power):
            total[j] = total[j] + x * factor
    q = cm_qseq(spec, n)
    width = max(len(q.a), max(total, default=-1) + 1)
    return all(KElt.of(q.coeff(j), f) == total[j] for j in range(width))


def expand_p_form(p: QuadPoly, n: int) -> QRPoly:
    """Q^{n/2} p(R Q^{-3/2}) written as a QR polynomial (exponents may be negative)."""
    out = {}
    for i, c in enumerate(p.int_coeffs()):
        if c:
            if (n - 3 * i) % 2:
                raise ValueError("odd power of sqrt(Q) survives")
            out[(i, (n - 3 * i) // 2)] = c
    return QRPoly(out)


def expand_q_form(q: QuadPoly, n: int) -> QRPoly:
    """R^{n/3} q(Q R^{-2/3}) written as a QR polynomial."""
    out = {}
    for i, c in enumerate(q.int_coeffs()):
        if c:
            if (n - 2 * i) % 3:
                raise ValueError("fractional power of R survives")
            out[((n - 2 * i) // 3, i)] = c
    return QRPoly(out)
