"""Zeros of calE_m in the standard fundamental domain.

calE_m is real on the lines Re z = 0 and Re z = -1/2, and e^(i m theta)
calE_m(e^(i theta)) is real on the unit circle, so boundary zeros are found as
sign changes of real functions of one variable.  i and omega are zeros forced
by the transformation law (m odd, resp. m not divisible by 3).  Interior zeros
come in pairs x + iy, -x + iy; the left member is located from a grid scan of
|calE_m| and polished by a damped two-variable Newton iteration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy.optimize import brentq

from .cmdata import CMPointSpec, chowla_selberg
from .numerics import calE_at_cm, calE_error_bound, eval_calE, kelt_sign

I_POINT = 1j
OMEGA = complex(-0.5, math.sqrt(3) / 2)
MERGE_RADIUS = 1e-4
KINDS = ("elliptic_forced", "line_re0", "line_rehalf", "arc", "interior_pair")


class CertificateError(ValueError):
    """Endpoint values too close to zero (or of equal sign) to certify a sign change."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


@dataclass(frozen=True)
class SearchRegion:
    y_max: float = max(3.5, 11 / (2 * math.pi) * math.log(13) + 1)
    grid_step: float = 0.01
    tolerance: float = 1e-6
    boundary_samples: int = 4000
    threshold_factor: float = 0.05


@dataclass
class ZeroRecord:
    m: int
    location: complex
    kind: str
    residual_norm: float          # |calE_m(location)| / 12^m
    mirror: complex | None = None
    confirmed: bool = True
    certificate: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"m": self.m, "kind": self.kind, "x": self.location.real, "y": self.location.imag,
               "residual": self.residual_norm, "confirmed": self.confirmed,
               "certificate": self.certificate}
        if self.mirror is not None:
            out["mirror"] = [self.mirror.real, self.mirror.imag]
        return out


def forced_zeros(m: int) -> list[complex]:
    out = []
    if m % 2 == 1:
        out.append(I_POINT)
    if m % 3 != 0:
        out.append(OMEGA)
    return out


def _scaled(m):
    scale = 12.0 ** m
    return lambda z: np.asarray(eval_calE(m, z)) / scale


# ----------------------------------------------------------------------------
# sign-change certificates


def _restriction(m: int, line: str):
    """Real-valued restriction of calE_m along a boundary piece, and its parametrization."""
    if line == "re0":
        return (lambda t: eval_calE(m, complex(0, t)).real), (lambda t: complex(0, t))
    if line == "rehalf":
        return (lambda t: eval_calE(m, complex(-0.5, t)).real), (lambda t: complex(-0.5, t))
    if line == "arc":
        def f(t):
            return (complex(math.cos(m * t), math.sin(m * t)) * eval_calE(m, complex(math.cos(t), math.sin(t)))).real
        return f, (lambda t: complex(math.cos(t), math.sin(t)))
    raise ValueError(f"unknown line {line!r}")


def _exact_endpoint(spec: CMPointSpec, m: int) -> dict:
    u, v = calE_at_cm(spec, m)
    omega = chowla_selberg(spec.D, 30)
    with mpmath.workdps(40):
        val = (u.to_mpf(mpmath) + v.to_mpf(mpmath) * mpmath.sqrt(abs(spec.D))) * omega ** (2 * m)
    if v.a == 0 and v.b == 0:
        sign = kelt_sign(u)
    elif u.a == 0 and u.b == 0:
        sign = kelt_sign(v)
    else:
        sign = int(mpmath.sign(val))
    return {"disc": spec.D, "rational_part": str(u), "sqrt_disc_part": str(v),
            "omega_power": 2 * m, "value": float(val), "sign": sign}


def sign_change_certificate(m: int, t1: float, t2: float, line: str = "re0",
                            specs: tuple[CMPointSpec | None, CMPointSpec | None] = (None, None),
                            margin: float = 1e3) -> dict:
    """Certify a zero of calE_m between parameters t1 and t2 of a boundary piece.

    Both endpoint values must exceed `margin` times their error bound (series tail
    plus rounding) and have opposite signs.  When an endpoint is a CM point its
    exact value (a number of K times a power of Omega_D) is recorded as well, and
    its sign must agree with the floating point one.
    """
    f, point = _restriction(m, line)
    ends = []
    for t, spec in zip((t1, t2), specs):
        z = point(t)
        if spec is not None and abs(spec.zD - z) > 1e-12:
            raise ValueError(f"endpoint {z} is not the CM point of D={spec.D}")
        val = f(t)
        err = calE_error_bound(m, z)
        if not abs(val) > margin * err:
            raise CertificateError("MARGIN", f"|calE_{m}({z})| = {abs(val):.3e} is within {margin:g} x {err:.1e}")
        end = {"t": t, "z": [z.real, z.imag], "value": val, "error_bound": err,
               "sign": 1 if val > 0 else -1}
        if spec is not None:
            end["exact"] = _exact_endpoint(spec, m)
            if end["exact"]["sign"] != end["sign"]:
                raise CertificateError("EXACT", "exact and numerical endpoint signs disagree")
        ends.append(end)
    if ends[0]["sign"] == ends[1]["sign"]:
        raise CertificateError("MARGIN", "endpoint values have the same sign")
    return {"m": m, "line": line, "endpoints": ends, "valid": True}


# ----------------------------------------------------------------------------
# boundary


def _boundary_pieces(region: SearchRegion):
    y0 = math.sqrt(3) / 2
    # i belongs to the Re = 0 line, omega to the arc
    return [("line_re0", "re0", 1.0, region.y_max),
            ("line_rehalf", "rehalf", y0, region.y_max),
            ("arc", "arc", math.pi / 2, 2 * math.pi / 3)]


def _near(z, pts, r=MERGE_RADIUS):
    return any(abs(z - p) < r for p in pts)


def boundary_zeros(m: int, region: SearchRegion = SearchRegion()) -> list[ZeroRecord]:
    """Forced zeros plus sign changes (refined by brentq) on the three boundary pieces."""
    scale = 12.0 ** m
    out = [ZeroRecord(m, z, "elliptic_forced", abs(eval_calE(m, z)) / scale,
                      certificate={"reason": "transformation law"}) for z in forced_zeros(m)]
    found = [r.location for r in out]
    for kind, line, lo, hi in _boundary_pieces(region):
        f, point = _restriction(m, line)
        grid = np.linspace(lo, hi, region.boundary_samples)
        vals = np.array([f(t) for t in grid])
        for k in range(len(grid) - 1):
            a, b = grid[k], grid[k + 1]
            if vals[k] == 0.0:
                t = a
            elif vals[k] * vals[k + 1] < 0:
                t = brentq(f, a, b, xtol=1e-13, rtol=1e-15)
            else:
                continue
            z = point(t)
            if _near(z, found):
                continue
            found.append(z)
            cert = {"bracket": [float(a), float(b)], "signs": [int(np.sign(vals[k])), int(np.sign(vals[k + 1]))],
                    "parameter": float(t)}
            out.append(ZeroRecord(m, z, kind, abs(eval_calE(m, z)) / scale, certificate=cert))
    return out


def no_sign_change_above(m: int, region: SearchRegion = SearchRegion(), y_top: float = 12.0,
                         samples: int = 2000) -> bool:
    """True when neither vertical line shows a sign change in [y_max, y_top]."""
    ys = np.linspace(region.y_max, y_top, samples)
    for x in (0.0, -0.5):
        v = np.real(eval_calE(m, x + 1j * ys))
        if np.any(v[:-1] * v[1:] <= 0):
            return False
    return True


# ----------------------------------------------------------------------------
# interior


def _inside(z: complex, y_max: float, margin: float = 1e-6) -> bool:
    return -0.5 + margin < z.real < -margin and abs(z) > 1 + margin and z.imag < y_max


def damped_newton(F, z0: complex, tol: float = 1e-14, max_iter: int = 60, h: float = 1e-7):
    """Solve F(z) = 0 as a real 2x2 system with a central-difference Jacobian.

    Steps are halved until |F| decreases.  Returns (z, |F(z)|, iterations).
    """
    z = complex(z0)
    fz = complex(F(z))
    for it in range(max_iter):
        if abs(fz) < tol:
            return z, abs(fz), it
        fx = (complex(F(z + h)) - complex(F(z - h))) / (2 * h)
        fy = (complex(F(z + 1j * h)) - complex(F(z - 1j * h))) / (2 * h)
        J = np.array([[fx.real, fy.real], [fx.imag, fy.imag]])
        try:
            dx, dy = np.linalg.solve(J, [-fz.real, -fz.imag])
        except np.linalg.LinAlgError:
            break
        step = complex(dx, dy)
        lam = 1.0
        while lam > 1e-6:
            zn = z + lam * step
            if zn.imag > 0.3:
                fn = complex(F(zn))
                if abs(fn) < abs(fz):
                    break
            lam /= 2
        else:
            break
        z, fz = zn, fn
    return z, abs(fz), max_iter


def winding_number(F, z0: complex, radius: float = 1e-3, samples: int = 256) -> int:
    """Degree of z -> F(z) around a small circle centred at z0."""
    t = np.linspace(0, 2 * math.pi, samples + 1)
    vals = F(z0 + radius * np.exp(1j * t))
    ang = np.unwrap(np.angle(vals))
    return int(round((ang[-1] - ang[0]) / (2 * math.pi)))


def _seeds(F, region: SearchRegion):
    """Grid points that are local minima of |F| below the threshold, or corners of
    cells on which both Re F and Im F change sign."""
    h = region.grid_step
    xs = np.arange(-0.5 + h / 2, 0, h)
    ys = np.arange(math.sqrt(3) / 2, region.y_max, h)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    Z = X + 1j * Y
    V = F(Z)
    outside = np.abs(Z) < 1
    A = np.abs(V)
    A[outside] = np.inf
    pad = np.pad(A, 1, constant_values=np.inf)
    is_min = np.ones_like(A, dtype=bool)
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            if dx or dy:
                is_min &= A <= pad[1 + dx:1 + dx + A.shape[0], 1 + dy:1 + dy + A.shape[1]]
    cross = np.ones_like(is_min)
    for part in (V.real, V.imag):
        sgn = np.where(outside, 0.0, np.sign(part))
        corners = np.stack([sgn[:-1, :-1], sgn[1:, :-1], sgn[:-1, 1:], sgn[1:, 1:]])
        c = np.zeros_like(is_min)
        c[:-1, :-1] = (corners.min(axis=0) < 0) & (corners.max(axis=0) > 0)
        cross &= c
    cand = np.argwhere((is_min & (A < region.threshold_factor)) | cross)
    return [Z[i, j] for i, j in cand]


def interior_zeros(m: int, region: SearchRegion = SearchRegion()) -> list[ZeroRecord]:
    """Zeros with -1/2 < Re z < 0 and |z| > 1, each reported with its mirror -conj(z)."""
    F = _scaled(m)
    confirmed: list[complex] = []
    unconfirmed: list[tuple[complex, float]] = []
    for seed in _seeds(F, region):
        z, res, _ = damped_newton(F, seed)
        if not _inside(z, region.y_max):
            continue
        if res > region.tolerance:
            if not _near(z, [u for u, _ in unconfirmed], 1e-3):
                unconfirmed.append((z, res))
            continue
        if not _near(z, confirmed, 1e-6):
            confirmed.append(z)
    out = []
    for z in sorted(confirmed, key=lambda w: (w.imag, w.real)):
        cert = {"winding": winding_number(F, z), "method": "damped newton"}
        out.append(ZeroRecord(m, z, "interior_pair", float(abs(F(z))), mirror=-z.conjugate(),
                               certificate=cert))
    for z, res in unconfirmed:
        if not _near(z, confirmed, 1e-3):
            out.append(ZeroRecord(m, z, "interior_pair", res, mirror=-z.conjugate(), confirmed=False))
    return out


def find_zeros(m: int, region: SearchRegion = SearchRegion()) -> list[ZeroRecord]:
    """Boundary and interior zeros of calE_m (interior pairs as single records)."""
    if m < 1 or m > 64:
        raise ValueError("m must lie in [1, 64]")
    return boundary_zeros(m, region) + interior_zeros(m, region)


def zero_count(records: list[ZeroRecord]) -> int:
    """Inequivalent zeros: interior pairs count twice, everything else once."""
    return sum(2 if r.kind == "interior_pair" else 1 for r in records if r.confirmed)


def expand_pairs(records: list[ZeroRecord]) -> list[tuple[str, complex]]:
    """(kind, location) for every zero, listing both members of interior pairs."""
    out = []
    for r in records:
        out.append((r.kind, r.location))
        if r.mirror is not None:
            out.append((r.kind, r.mirror))
    return out
