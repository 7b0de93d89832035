# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled mod-l stepping kernels; see _pykernels for the reference versions."""
import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy, memcmp

ctypedef long long i64

cnp.import_array()


cdef inline void _step(i64* prev, i64* curr, i64* out, long n,
                       i64[:, :, ::1] lin, i64[:, :, ::1] quad, i64[:, ::1] a3,
                       int l, int d, int K) noexcept nogil:
    # out[j] = sum_i lin[r,i] curr[j-i] + a3[i] curr'[j-i] + quad[r,i] prev[j-i]
    cdef int r = n % l
    cdef int j, i, m
    cdef i64 sa, sb, xa, xb, ya, yb
    for j in range(l):
        sa = 0
        sb = 0
        for i in range(K):
            if i > j:
                break
            m = j - i
            xa = lin[r, 0, i]
            xb = lin[r, 1, i]
            ya = curr[m]
            yb = curr[l + m]
            sa += xa * ya + d * xb * yb
            sb += xa * yb + xb * ya
            if m + 1 < l:
                ya = ((m + 1) * curr[m + 1]) % l
                yb = ((m + 1) * curr[l + m + 1]) % l
                xa = a3[0, i]
                xb = a3[1, i]
                sa += xa * ya + d * xb * yb
                sb += xa * yb + xb * ya
            xa = quad[r, 0, i]
            xb = quad[r, 1, i]
            ya = prev[m]
            yb = prev[l + m]
            sa += xa * ya + d * xb * yb
            sb += xa * yb + xb * ya
        out[j] = sa % l
        out[l + j] = sb % l


def advance(i64[:, ::1] prev, i64[:, ::1] curr, long n0, long steps,
            i64[:, :, ::1] lin, i64[:, :, ::1] quad, i64[:, ::1] a3,
            int l, int d, consts=None):
    cdef int K = min(lin.shape[2], l)
    cdef i64* p = <i64*> malloc(2 * l * sizeof(i64))
    cdef i64* c = <i64*> malloc(2 * l * sizeof(i64))
    cdef i64* nx = <i64*> malloc(2 * l * sizeof(i64))
    cdef i64* tmp
    cdef i64[::1] cv
    cdef bint record = consts is not None
    cdef long s, n
    if record:
        cv = consts
    memcpy(p, &prev[0, 0], 2 * l * sizeof(i64))
    memcpy(c, &curr[0, 0], 2 * l * sizeof(i64))
    n = n0
    with nogil:
        for s in range(steps):
            if record:
                cv[s] = c[0] + l * c[l]
            _step(p, c, nx, n, lin, quad, a3, l, d, K)
            tmp = p
            p = c
            c = nx
            nx = tmp
            n += 1
    memcpy(&prev[0, 0], p, 2 * l * sizeof(i64))
    memcpy(&curr[0, 0], c, 2 * l * sizeof(i64))
    free(p)
    free(c)
    free(nx)


def compare_run(i64[:, ::1] pa, i64[:, ::1] ca, long na,
                i64[:, ::1] pb, i64[:, ::1] cb, long nb, long steps,
                i64[:, :, ::1] lin, i64[:, :, ::1] quad, i64[:, ::1] a3,
                int l, int d, bint stop_at_first):
    cdef int K = min(lin.shape[2], l)
    cdef size_t sz = 2 * l * sizeof(i64)
    cdef i64* buf = <i64*> malloc(6 * sz)
    cdef i64* p1 = buf
    cdef i64* c1 = buf + 2 * l
    cdef i64* n1 = buf + 4 * l
    cdef i64* p2 = buf + 6 * l
    cdef i64* c2 = buf + 8 * l
    cdef i64* n2 = buf + 10 * l
    cdef i64* tmp
    cdef long s
    cdef long first = -1, last = -1
    memcpy(p1, &pa[0, 0], sz)
    memcpy(c1, &ca[0, 0], sz)
    memcpy(p2, &pb[0, 0], sz)
    memcpy(c2, &cb[0, 0], sz)
    with nogil:
        for s in range(steps):
            if memcmp(c1, c2, sz) != 0:
                if first < 0:
                    first = s
                last = s
                if stop_at_first:
                    break
            _step(p1, c1, n1, na + s, lin, quad, a3, l, d, K)
            tmp = p1
            p1 = c1
            c1 = n1
            n1 = tmp
            _step(p2, c2, n2, nb + s, lin, quad, a3, l, d, K)
            tmp = p2
            p2 = c2
            c2 = n2
            n2 = tmp
    memcpy(&pa[0, 0], p1, sz)
    memcpy(&ca[0, 0], c1, sz)
    memcpy(&pb[0, 0], p2, sz)
    memcpy(&cb[0, 0], c2, sz)
    free(buf)
    return first, last


cdef inline void _matvec(i64[:, :, ::1] M, i64* x, i64* out, int l, int d) noexcept nogil:
    cdef int i, j
    cdef i64 sa, sb, bb, xa, xb, ma, mb
    for i in range(l):
        sa = 0
        sb = 0
        bb = 0
        for j in range(l):
            ma = M[0, i, j]
            mb = M[1, i, j]
            xa = x[j]
            xb = x[l + j]
            sa += ma * xa
            bb += mb * xb
            sb += ma * xb + mb * xa
        out[i] = (sa + d * (bb % l)) % l
        out[l + i] = sb % l


def psi_consts(i64[:, :, ::1] M, i64[:, :, ::1] Phi, i64[:, ::1] X, long count,
               int l, int d, out):
    cdef size_t sz = 2 * l * sizeof(i64)
    cdef i64* x = <i64*> malloc(sz)
    cdef i64* y = <i64*> malloc(sz)
    cdef i64* c = <i64*> malloc(sz)
    cdef i64* tmp
    cdef long k
    cdef int r
    cdef short[::1] o16
    cdef i64[::1] o64
    cdef bint small = out.dtype == np.int16
    if small:
        o16 = out
    else:
        o64 = out
    memcpy(x, &X[0, 0], sz)
    with nogil:
        for k in range(count):
            _matvec(Phi, x, c, l, d)
            if small:
                for r in range(l):
                    o16[k * l + r] = <short> (c[r] + l * c[l + r])
            else:
                for r in range(l):
                    o64[k * l + r] = c[r] + l * c[l + r]
            _matvec(M, x, y, l, d)
            tmp = x
            x = y
            y = tmp
    memcpy(&X[0, 0], x, sz)
    free(x)
    free(y)
    free(c)


def trajectory(i64[:, ::1] prev, i64[:, ::1] curr, long n0, long steps,
               i64[:, :, ::1] lin, i64[:, :, ::1] quad, i64[:, ::1] a3,
               int l, int d, i64[:, :, ::1] out):
    cdef int K = min(lin.shape[2], l)
    cdef size_t sz = 2 * l * sizeof(i64)
    cdef i64* p = <i64*> malloc(sz)
    cdef long s
    memcpy(p, &prev[0, 0], sz)
    memcpy(&out[0, 0, 0], &curr[0, 0], sz)
    with nogil:
        for s in range(steps):
            if s == 0:
                _step(p, &out[0, 0, 0], &out[1, 0, 0], n0, lin, quad, a3, l, d, K)
            else:
                _step(&out[s - 1, 0, 0], &out[s, 0, 0], &out[s + 1, 0, 0], n0 + s,
                      lin, quad, a3, l, d, K)
    if steps > 0:
        memcpy(&prev[0, 0], &out[steps - 1, 0, 0], sz)
        memcpy(&curr[0, 0], &out[steps, 0, 0], sz)
    free(p)
