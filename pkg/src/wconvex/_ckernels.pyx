# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops; see ``_pykernels`` for the reference versions.

Both modules accumulate kernel taps in row-major order starting from 0.0,
so on a build without FMA contraction the outputs are bit-identical.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs

cnp.import_array()


def conv_forward(const double[:, ::1] x, const double[:, ::1] k, Py_ssize_t ca, Py_ssize_t cb):
    cdef Py_ssize_t H = x.shape[0], W = x.shape[1]
    cdef Py_ssize_t kh = k.shape[0], kw = k.shape[1]
    cdef Py_ssize_t i, j, a, b, r, c
    cdef double acc
    out = np.empty((H, W), dtype=np.float64)
    cdef double[:, ::1] o = out
    # row/col offsets pre-reduced to [0, H) / [0, W) so indices stay non-negative
    cdef Py_ssize_t[::1] ro = np.empty(kh, dtype=np.intp)
    cdef Py_ssize_t[::1] co = np.empty(kw, dtype=np.intp)
    for a in range(kh):
        ro[a] = ((ca - a) % H + H) % H
    for b in range(kw):
        co[b] = ((cb - b) % W + W) % W
    with nogil:
        for i in range(H):
            for j in range(W):
                acc = 0.0
                for a in range(kh):
                    r = i + ro[a]
                    if r >= H:
                        r = r - H
                    for b in range(kw):
                        c = j + co[b]
                        if c >= W:
                            c = c - W
                        acc = acc + k[a, b] * x[r, c]
                o[i, j] = acc
    return out


def conv_adjoint(const double[:, ::1] u, const double[:, ::1] k, Py_ssize_t ca, Py_ssize_t cb):
    cdef Py_ssize_t H = u.shape[0], W = u.shape[1]
    cdef Py_ssize_t kh = k.shape[0], kw = k.shape[1]
    cdef Py_ssize_t i, j, a, b, r, c
    cdef double acc
    out = np.empty((H, W), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t[::1] ro = np.empty(kh, dtype=np.intp)
    cdef Py_ssize_t[::1] co = np.empty(kw, dtype=np.intp)
    for a in range(kh):
        ro[a] = ((a - ca) % H + H) % H
    for b in range(kw):
        co[b] = ((b - cb) % W + W) % W
    with nogil:
        for i in range(H):
            for j in range(W):
                acc = 0.0
                for a in range(kh):
                    r = i + ro[a]
                    if r >= H:
                        r = r - H
                    for b in range(kw):
                        c = j + co[b]
                        if c >= W:
                            c = c - W
                        acc = acc + k[a, b] * u[r, c]
                o[i, j] = acc
    return out


cdef inline double _welsch_scalar(double y, double lam, double step, double rtol,
                                  int max_iter, int *fail) noexcept nogil:
    cdef double a = fabs(y), lo = 0.0, hi = a, x = a, e, f, fp, xn
    cdef double inv = 1.0 / (lam * lam)
    cdef double tol = rtol * (a if a > 1.0 else 1.0)
    cdef int it
    if a == 0.0:
        return 0.0
    for it in range(max_iter):
        e = exp(-x * x * inv)
        f = x - a + step * x * e
        if fabs(f) <= tol:
            return x if y > 0 else -x
        if f > 0.0:
            hi = x
        else:
            lo = x
        fp = 1.0 + step * e * (1.0 - 2.0 * x * x * inv)
        xn = x - f / fp
        if not (xn > lo and xn < hi):
            xn = 0.5 * (lo + hi)
        if xn == x:
            return x if y > 0 else -x
        x = xn
    fail[0] = 1
    return x if y > 0 else -x


def prox_welsch(const double[::1] y, double lam, double step, double rtol, int max_iter):
    cdef Py_ssize_t n = y.shape[0], i
    cdef int fail = 0
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _welsch_scalar(y[i], lam, step, rtol, max_iter, &fail)
    if fail:
        raise ArithmeticError("Welsch prox did not converge")
    return out
