"""Pure numpy versions of the mod-l stepping kernels.

Same signatures and semantics as the compiled module _ckernels.  States are
int64 arrays of shape (2, l): row 0 holds the rational parts, row 1 the
sqrt(d) parts of the coefficients of 1, t, ..., t^(l-1).

The recursion coefficients come in banded form:
    lin[r]  = a1 + r a2          (shape (l, 2, K))
    quad[r] = r (r + 11) a4      (shape (l, 2, K))
    a3                           (shape (2, K))
all reduced mod l, K = number of stored t-coefficients.
"""
import numpy as np


def _accumulate(acc_a, acc_b, coef, src, l, d):
    K = coef.shape[1]
    for i in range(min(K, l)):
        xa = int(coef[0, i])
        xb = int(coef[1, i])
        if xa == 0 and xb == 0:
            continue
        sa = src[0, :l - i]
        sb = src[1, :l - i]
        acc_a[i:] += xa * sa + (d * xb) * sb
        acc_b[i:] += xa * sb + xb * sa


def step(prev, curr, n, lin, quad, a3, l, d, weights=None):
    """Return q_{n+1} given q_{n-1} = prev and q_n = curr.

    prev and curr have shape (2, l) or (2, l, batch).
    """
    r = n % l
    if weights is None:
        weights = np.arange(1, l, dtype=np.int64)
    # trailing axes (if any) hold a batch of independent polynomials
    w = weights.reshape((-1,) + (1,) * (curr.ndim - 2))
    deriv = np.zeros_like(curr)
    deriv[:, :l - 1] = (curr[:, 1:] * w) % l
    acc_a = np.zeros(curr.shape[1:], dtype=np.int64)
    acc_b = np.zeros(curr.shape[1:], dtype=np.int64)
    _accumulate(acc_a, acc_b, lin[r], curr, l, d)
    _accumulate(acc_a, acc_b, a3, deriv, l, d)
    _accumulate(acc_a, acc_b, quad[r], prev, l, d)
    return np.stack([acc_a % l, acc_b % l])


def advance(prev, curr, n0, steps, lin, quad, a3, l, d, consts=None):
    """Step the pair (prev, curr) = (q_{n0-1}, q_{n0}) forward in place.

    If consts is given, consts[s] receives the code a + l*b of the constant
    term of q_{n0+s} for 0 <= s < steps.
    """
    weights = np.arange(1, l, dtype=np.int64)
    p = prev.copy()
    c = curr.copy()
    n = n0
    for s in range(steps):
        if consts is not None:
            consts[s] = c[0, 0] + l * c[1, 0]
        nxt = step(p, c, n, lin, quad, a3, l, d, weights)
        p = c
        c = nxt
        n += 1
    prev[...] = p
    curr[...] = c


def compare_run(pa, ca, na, pb, cb, nb, steps, lin, quad, a3, l, d, stop_at_first):
    """Run two sequences side by side, comparing q_{na+s} with q_{nb+s}.

    Returns (first, last): offsets s in [0, steps) of the first and last
    mismatch, -1 when there is none.  With stop_at_first the run ends at the
    first mismatch.  Both states are advanced in place.
    """
    weights = np.arange(1, l, dtype=np.int64)
    first = last = -1
    for s in range(steps):
        if not np.array_equal(ca, cb):
            if first < 0:
                first = s
            last = s
            if stop_at_first:
                return first, last
        nxt = step(pa, ca, na + s, lin, quad, a3, l, d, weights)
        pa[...] = ca
        ca[...] = nxt
        nxt = step(pb, cb, nb + s, lin, quad, a3, l, d, weights)
        pb[...] = cb
        cb[...] = nxt
    return first, last


def _matvec(M, x, l, d):
    aa = M[0] @ x[0]
    bb = (M[1] @ x[1]) % l
    ab = M[0] @ x[1] + M[1] @ x[0]
    return (aa + d * bb) % l, ab % l


def psi_consts(M, Phi, X, count, l, d, out):
    """Constant terms of q_{kl + r} for k < count, written to out[k*l + r].

    X holds q_{kl} for the starting k and is advanced in place by M (the
    l-step map); Phi[:, r, :] is the row giving the constant term of
    q_{kl + r} from q_{kl}.
    """
    xa = X[0].copy()
    xb = X[1].copy()
    x = np.stack([xa, xb])
    for k in range(count):
        ca, cb = _matvec(Phi, x, l, d)
        out[k * l:(k + 1) * l] = ca + l * cb
        na, nb = _matvec(M, x, l, d)
        x = np.stack([na, nb])
    X[...] = x


def trajectory(prev, curr, n0, steps, lin, quad, a3, l, d, out):
    """Write q_{n0+s} into out[s] for 0 <= s <= steps and advance in place.

    out must have shape at least (steps + 1, 2, l); on return (prev, curr)
    holds (q_{n0+steps-1}, q_{n0+steps}).
    """
    weights = np.arange(1, l, dtype=np.int64)
    p = prev.copy()
    c = curr.copy()
    out[0] = c
    for s in range(steps):
        nxt = step(p, c, n0 + s, lin, quad, a3, l, d, weights)
        p = c
        c = nxt
        out[s + 1] = c
    prev[...] = p
    curr[...] = c
