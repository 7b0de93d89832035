"""Exact arithmetic in Z[sqrt d], its residue rings mod l, and R_l = (O_K/l)[t]/(t^l).

Elements of O_K are stored in the Z[sqrt d] sub-basis as integer pairs (a, b)
meaning a + b*sqrt(d).  The rational field is the case d = 1 with b = 0.

Besides the scalar classes there is a small set of numpy helpers working on
arrays whose leading axis has length 2 (rational part, sqrt(d) part).  These
are what the periodicity engine uses in its inner loops.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import numpy as np
from sympy import factorint


@dataclass(frozen=True)
class FieldSpec:
    """Q (d = 1) or Q(sqrt d) for squarefree d > 1."""

    d: int = 1

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("only real quadratic fields and Q are supported")
        if self.d > 1 and any(e > 1 for e in factorint(self.d).values()):
            raise ValueError(f"d={self.d} is not squarefree")

    @property
    def is_rational(self) -> bool:
        return self.d == 1

    @property
    def name(self) -> str:
        return "Q" if self.d == 1 else f"Q(sqrt{self.d})"

    def __str__(self):
        return self.name


RATIONAL = FieldSpec(1)
QSQRT2 = FieldSpec(2)
QSQRT5 = FieldSpec(5)


def _check_field(x, y):
    if x.field != y.field:
        raise ValueError(f"field mismatch: {x.field} vs {y.field}")


@dataclass(frozen=True)
class QuadElt:
    """a + b*sqrt(d) with arbitrary precision integers."""

    a: int
    b: int = 0
    field: FieldSpec = RATIONAL

    def __post_init__(self):
        object.__setattr__(self, "a", int(self.a))
        object.__setattr__(self, "b", int(self.b))
        if self.field.is_rational and self.b != 0:
            raise ValueError("rational element with nonzero sqrt part")

    def _coerce(self, other):
        if isinstance(other, QuadElt):
            _check_field(self, other)
            return other
        if isinstance(other, (int, np.integer)):
            return QuadElt(int(other), 0, self.field)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return QuadElt(self.a + other.a, self.b + other.b, self.field)

    __radd__ = __add__

    def __neg__(self):
        return QuadElt(-self.a, -self.b, self.field)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return QuadElt(self.a - other.a, self.b - other.b, self.field)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        d = self.field.d
        return QuadElt(self.a * other.a + d * self.b * other.b,
                       self.a * other.b + self.b * other.a, self.field)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            raise ValueError("negative power of a ring element")
        result = QuadElt(1, 0, self.field)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def conj(self) -> QuadElt:
        return QuadElt(self.a, -self.b, self.field)

    def norm(self) -> int:
        return self.a * self.a - self.field.d * self.b * self.b

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def content(self) -> int:
        """gcd of the two integer coordinates."""
        return gcd(self.a, self.b)

    def exact_div_int(self, n: int) -> QuadElt:
        if self.a % n or self.b % n:
            raise ValueError(f"{self} is not divisible by {n}")
        return QuadElt(self.a // n, self.b // n, self.field)

    def reduce(self, l: int) -> ResidueElt:
        return ResidueElt(self.a, self.b, l, self.field)

    def to_float(self) -> float:
        """Value under the embedding with sqrt(d) > 0."""
        return float(self.to_kelt().to_float())

    def to_kelt(self) -> KElt:
        return KElt(Fraction(self.a), Fraction(self.b), self.field)

    def pair(self) -> tuple[int, int]:
        return (self.a, self.b)

    def __str__(self):
        if self.field.is_rational or self.b == 0:
            return str(self.a)
        return f"{self.a}{'+' if self.b >= 0 else '-'}{abs(self.b)}*sqrt{self.field.d}"


@dataclass(frozen=True)
class KElt:
    """Element a + b*sqrt(d) of K with rational coordinates.

    Only used for table constants such as 42 + 63/sqrt(5) whose coordinates
    are not integral, and for the exact substitution identities.
    """

    a: Fraction
    b: Fraction = Fraction(0)
    field: FieldSpec = RATIONAL

    def __post_init__(self):
        object.__setattr__(self, "a", Fraction(self.a))
        object.__setattr__(self, "b", Fraction(self.b))
        if self.field.is_rational and self.b != 0:
            raise ValueError("rational element with nonzero sqrt part")

    @staticmethod
    def of(x, field: FieldSpec) -> KElt:
        if isinstance(x, KElt):
            return x
        if isinstance(x, QuadElt):
            return x.to_kelt()
        return KElt(Fraction(x), Fraction(0), field)

    def _c(self, other):
        other = KElt.of(other, self.field)
        _check_field(self, other)
        return other

    def __add__(self, other):
        o = self._c(other)
        return KElt(self.a + o.a, self.b + o.b, self.field)

    __radd__ = __add__

    def __neg__(self):
        return KElt(-self.a, -self.b, self.field)

    def __sub__(self, other):
        return self + (-self._c(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._c(other)
        d = self.field.d
        return KElt(self.a * o.a + d * self.b * o.b, self.a * o.b + self.b * o.a, self.field)

    __rmul__ = __mul__

    def norm(self) -> Fraction:
        return self.a * self.a - self.field.d * self.b * self.b

    def inverse(self) -> KElt:
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("inverse of zero")
        return KElt(self.a / n, -self.b / n, self.field)

    def __truediv__(self, other):
        return self * self._c(other).inverse()

    def __rtruediv__(self, other):
        return KElt.of(other, self.field) * self.inverse()

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        result = KElt(Fraction(1), Fraction(0), self.field)
        for _ in range(e):
            result = result * self
        return result

    def is_integral_pair(self) -> bool:
        return self.a.denominator == 1 and self.b.denominator == 1

    def to_quad(self) -> QuadElt:
        if not self.is_integral_pair():
            raise ValueError(f"{self} does not lie in Z[sqrt d]")
        return QuadElt(int(self.a), int(self.b), self.field)

    def to_float(self) -> float:
        return float(self.a) + float(self.b) * (self.field.d ** 0.5)

    def to_mpf(self, mp):
        """Value as an mpmath number (mp is the mpmath module or context)."""
        return mp.mpf(self.a.numerator) / self.a.denominator + \
            mp.mpf(self.b.numerator) / self.b.denominator * mp.sqrt(self.field.d)

    def __str__(self):
        if self.field.is_rational or self.b == 0:
            return str(self.a)
        return f"{self.a}+({self.b})*sqrt{self.field.d}"


def unit_group_order(l: int, field: FieldSpec) -> int:
    """Order of (Z/l[sqrt d])^* for an odd prime l."""
    if field.is_rational:
        return l - 1
    d = field.d
    if d % l == 0:
        return l * (l - 1)
    if pow(d % l, (l - 1) // 2, l) == 1:
        return (l - 1) ** 2
    return l * l - 1


@dataclass(frozen=True)
class ResidueElt:
    """a + b*sqrt(d) in Z/l[sqrt d], which is O_K/lO_K for odd l."""

    a: int
    b: int
    l: int
    field: FieldSpec = RATIONAL

    def __post_init__(self):
        if self.l < 3 or self.l % 2 == 0:
            raise ValueError("modulus must be an odd prime")
        object.__setattr__(self, "a", int(self.a) % self.l)
        object.__setattr__(self, "b", int(self.b) % self.l)
        if self.field.is_rational and self.b != 0:
            raise ValueError("rational element with nonzero sqrt part")

    @staticmethod
    def one(l: int, field: FieldSpec = RATIONAL) -> ResidueElt:
        return ResidueElt(1, 0, l, field)

    def _coerce(self, other):
        if isinstance(other, ResidueElt):
            if other.l != self.l:
                raise ValueError("modulus mismatch")
            _check_field(self, other)
            return other
        if isinstance(other, (int, np.integer)):
            return ResidueElt(int(other), 0, self.l, self.field)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return ResidueElt(self.a + o.a, self.b + o.b, self.l, self.field)

    __radd__ = __add__

    def __neg__(self):
        return ResidueElt(-self.a, -self.b, self.l, self.field)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return ResidueElt(self.a - o.a, self.b - o.b, self.l, self.field)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        d = self.field.d
        return ResidueElt(self.a * o.a + d * self.b * o.b, self.a * o.b + self.b * o.a,
                          self.l, self.field)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        result = ResidueElt.one(self.l, self.field)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def norm(self) -> int:
        return (self.a * self.a - self.field.d * self.b * self.b) % self.l

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def is_one(self) -> bool:
        return self.a == 1 and self.b == 0

    def is_unit(self) -> bool:
        # the regular representation [[a, d b], [b, a]] has determinant a^2 - d b^2
        return self.norm() != 0

    def inverse(self) -> ResidueElt:
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError(f"{self} is not a unit mod {self.l}")
        ninv = pow(n, -1, self.l)
        return ResidueElt(self.a * ninv, -self.b * ninv, self.l, self.field)

    def order(self) -> int:
        return mult_order(self)

    def pair(self) -> tuple[int, int]:
        return (self.a, self.b)

    def code(self) -> int:
        return self.a + self.l * self.b

    def __str__(self):
        if self.field.is_rational or self.b == 0:
            return f"{self.a} mod {self.l}"
        return f"{self.a}+{self.b}*sqrt{self.field.d} mod {self.l}"


def mult_order(u: ResidueElt) -> int:
    """Least e >= 1 with u^e = 1."""
    if not u.is_unit():
        raise ValueError(f"{u} is not a unit")
    e = unit_group_order(u.l, u.field)
    for p in factorint(e):
        while e % p == 0 and (u ** (e // p)).is_one():
            e //= p
    return e


# ----------------------------------------------------------------------------
# array-level ring operations; leading axis indexes (rational, sqrt d) parts


def qmul(x: np.ndarray, y: np.ndarray, l: int, d: int) -> np.ndarray:
    """Elementwise product in Z/l[sqrt d] of arrays shaped (2, ...)."""
    xa, xb = x[0], x[1]
    ya, yb = y[0], y[1]
    return np.stack([(xa * ya + d * ((xb * yb) % l)) % l, (xa * yb + xb * ya) % l])


def qscale(x: np.ndarray, u: tuple[int, int], l: int, d: int) -> np.ndarray:
    """Multiply every entry of x (shape (2, ...)) by the scalar u = (a, b)."""
    a, b = u
    return np.stack([(a * x[0] + (d * b % l) * x[1]) % l, (b * x[0] + a * x[1]) % l])


def qnorm(x: np.ndarray, l: int, d: int) -> np.ndarray:
    return (x[0] * x[0] - d * ((x[1] * x[1]) % l)) % l


def qpolymul(x: np.ndarray, y: np.ndarray, l: int, d: int) -> np.ndarray:
    """Product of two (2, n) coefficient arrays in (Z/l[sqrt d])[t]/(t^n)."""
    n = x.shape[1]
    aa = np.convolve(x[0], y[0])[:n]
    bb = np.convolve(x[1], y[1])[:n]
    ab = np.convolve(x[0], y[1])[:n] + np.convolve(x[1], y[0])[:n]
    return np.stack([(aa + d * (bb % l)) % l, ab % l])


def qpolyderiv(x: np.ndarray, l: int) -> np.ndarray:
    """Formal derivative of (2, n) coefficient arrays, truncated to length n."""
    n = x.shape[1]
    out = np.zeros_like(x)
    out[:, :n - 1] = (x[:, 1:] * np.arange(1, n)) % l
    return out


def qmatmul(A: np.ndarray, B: np.ndarray, l: int, d: int) -> np.ndarray:
    """Matrix product for matrices over Z/l[sqrt d] stored as (2, n, k) arrays.

    Entries stay below l, so each int64 dot product is bounded by n*l^2 and
    cannot overflow for the sizes used here.
    """
    aa = A[0] @ B[0]
    bb = (A[1] @ B[1]) % l
    ab = A[0] @ B[1] + A[1] @ B[0]
    return np.stack([(aa + d * bb) % l, ab % l])


def qmatvec(A: np.ndarray, x: np.ndarray, l: int, d: int) -> np.ndarray:
    return qmatmul(A, x[:, :, None], l, d)[:, :, 0]


def qmatpow(A: np.ndarray, e: int, l: int, d: int) -> np.ndarray:
    n = A.shape[1]
    result = np.zeros_like(A)
    result[0] = np.eye(n, dtype=np.int64)
    base = A.copy()
    while e:
        if e & 1:
            result = qmatmul(result, base, l, d)
        base = qmatmul(base, base, l, d)
        e >>= 1
    return result


def qmatpow_apply(A: np.ndarray, e: int, x: np.ndarray, l: int, d: int) -> np.ndarray:
    """A^e x by binary powering, applying squarings of A to the vector."""
    x = x.copy()
    base = A.copy()
    while e:
        if e & 1:
            x = qmatvec(base, x, l, d)
        e >>= 1
        if e:
            base = qmatmul(base, base, l, d)
    return x


class TruncPoly:
    """Element of R_l = (O_K/lO_K)[t]/(t^l) stored as a (2, l) int64 array."""

    __slots__ = ("coeffs", "l", "field")

    def __init__(self, coeffs, l: int, field: FieldSpec = RATIONAL):
        arr = np.asarray(coeffs, dtype=np.int64)
        if arr.ndim == 1:
            arr = np.stack([arr, np.zeros_like(arr)])
        if arr.shape[0] != 2 or arr.ndim != 2:
            raise ValueError("coefficient array must have shape (2, n) or (n,)")
        n = arr.shape[1]
        if n < l:
            arr = np.concatenate([arr, np.zeros((2, l - n), dtype=np.int64)], axis=1)
        arr = arr[:, :l] % l
        if field.is_rational and arr[1].any():
            raise ValueError("rational polynomial with sqrt coefficients")
        arr.flags.writeable = False
        self.coeffs = arr
        self.l = l
        self.field = field

    @staticmethod
    def zero(l: int, field: FieldSpec = RATIONAL) -> TruncPoly:
        return TruncPoly(np.zeros((2, l), dtype=np.int64), l, field)

    @staticmethod
    def one(l: int, field: FieldSpec = RATIONAL) -> TruncPoly:
        c = np.zeros((2, l), dtype=np.int64)
        c[0, 0] = 1
        return TruncPoly(c, l, field)

    @staticmethod
    def monomial(i: int, l: int, field: FieldSpec = RATIONAL) -> TruncPoly:
        c = np.zeros((2, l), dtype=np.int64)
        if i < l:
            c[0, i] = 1
        return TruncPoly(c, l, field)

    @staticmethod
    def from_residues(elts, l: int, field: FieldSpec = RATIONAL) -> TruncPoly:
        c = np.zeros((2, l), dtype=np.int64)
        for i, e in enumerate(list(elts)[:l]):
            c[0, i], c[1, i] = e.a, e.b
        return TruncPoly(c, l, field)

    def _check(self, other: TruncPoly):
        if other.l != self.l:
            raise ValueError("modulus mismatch")
        _check_field(self, other)

    def __add__(self, other: TruncPoly) -> TruncPoly:
        self._check(other)
        return TruncPoly(self.coeffs + other.coeffs, self.l, self.field)

    def __sub__(self, other: TruncPoly) -> TruncPoly:
        self._check(other)
        return TruncPoly(self.coeffs - other.coeffs, self.l, self.field)

    def __neg__(self) -> TruncPoly:
        return TruncPoly(-self.coeffs, self.l, self.field)

    def __mul__(self, other) -> TruncPoly:
        if isinstance(other, TruncPoly):
            self._check(other)
            return TruncPoly(qpolymul(self.coeffs, other.coeffs, self.l, self.field.d),
                             self.l, self.field)
        if isinstance(other, ResidueElt):
            return TruncPoly(qscale(self.coeffs, other.pair(), self.l, self.field.d),
                             self.l, self.field)
        if isinstance(other, (int, np.integer)):
            return TruncPoly(self.coeffs * (int(other) % self.l), self.l, self.field)
        return NotImplemented

    __rmul__ = __mul__

    def derivative(self) -> TruncPoly:
        return TruncPoly(qpolyderiv(self.coeffs, self.l), self.l, self.field)

    def coeff(self, i: int) -> ResidueElt:
        return ResidueElt(self.coeffs[0, i], self.coeffs[1, i], self.l, self.field)

    def constant(self) -> ResidueElt:
        return self.coeff(0)

    def is_zero(self) -> bool:
        return not self.coeffs.any()

    def key(self) -> bytes:
        return self.coeffs.tobytes()

    def __eq__(self, other):
        if not isinstance(other, TruncPoly):
            return NotImplemented
        return self.l == other.l and self.field == other.field and \
            bool(np.array_equal(self.coeffs, other.coeffs))

    def __hash__(self):
        return hash((self.l, self.field, self.key()))

    def to_pairs(self) -> list[tuple[int, int]]:
        return [(int(a), int(b)) for a, b in zip(self.coeffs[0], self.coeffs[1])]

    def __repr__(self):
        terms = []
        for i, (a, b) in enumerate(self.to_pairs()):
            if a == 0 and b == 0:
                continue
            c = str(a) if b == 0 else f"({a}+{b}s)"
            terms.append(c if i == 0 else f"{c}t^{i}")
        return f"TruncPoly[{self.l}]({' + '.join(terms) or '0'})"


def trunc_mul(p: TruncPoly, q: TruncPoly) -> TruncPoly:
    return p * q


def trunc_derivative(p: TruncPoly) -> TruncPoly:
    return p.derivative()


def quad_add(x: QuadElt, y: QuadElt) -> QuadElt:
    _check_field(x, y)
    return x + y


def quad_mul(x: QuadElt, y: QuadElt) -> QuadElt:
    _check_field(x, y)
    return x * y


def is_unit(u: ResidueElt) -> bool:
    return u.is_unit()


def invert(u: ResidueElt) -> ResidueElt:
    return u.inverse()


def ideal_is_whole(gens: list[ResidueElt]) -> bool:
    """Whether the ideal generated by gens is all of Z/l[sqrt d].

    The ideal is the F_l-span of g and g*sqrt(d) for every generator g; it is
    the whole ring exactly when that span has dimension 2 (dimension 1 for Q).
    """
    if not gens:
        return False
    l, field = gens[0].l, gens[0].field
    rows = []
    for g in gens:
        rows.append([g.a, g.b])
        if not field.is_rational:
            s = g * ResidueElt(0, 1, l, field)
            rows.append([s.a, s.b])
    target = 1 if field.is_rational else 2
    return _rank_mod_p(rows, l) == target


def _rank_mod_p(rows: list[list[int]], p: int) -> int:
    m = [[x % p for x in r] for r in rows]
    rank = 0
    ncols = len(m[0]) if m else 0
    for col in range(ncols):
        piv = next((i for i in range(rank, len(m)) if m[i][col]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = pow(m[rank][col], -1, p)
        m[rank] = [(x * inv) % p for x in m[rank]]
        for i in range(len(m)):
            if i != rank and m[i][col]:
                f = m[i][col]
                m[i] = [(x - f * y) % p for x, y in zip(m[i], m[rank])]
        rank += 1
    return rank
