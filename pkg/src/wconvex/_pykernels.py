"""Pure numpy implementations of the inner loops in ``_ckernels``."""

import numpy as np


def conv_forward(x, k, ca, cb):
    out = np.zeros_like(x)
    kh, kw = k.shape
    for a in range(kh):
        for b in range(kw):
            out += k[a, b] * np.roll(x, (a - ca, b - cb), axis=(0, 1))
    return out


def conv_adjoint(u, k, ca, cb):
    out = np.zeros_like(u)
    kh, kw = k.shape
    for a in range(kh):
        for b in range(kw):
            out += k[a, b] * np.roll(u, (ca - a, cb - b), axis=(0, 1))
    return out


def prox_welsch(y, lam, step, rtol, max_iter):
    # vectorized safeguarded Newton on x - |y| + step * x exp(-x^2/lam^2) = 0
    a = np.abs(y)
    lo = np.zeros_like(a)
    hi = a.copy()
    x = a.copy()
    tol = rtol * np.maximum(a, 1.0)
    inv = 1.0 / (lam * lam)
    active = a > 0
    for _ in range(max_iter):
        if not active.any():
            break
        xa = x[active]
        e = np.exp(-xa * xa * inv)
        f = xa - a[active] + step * xa * e
        done = np.abs(f) <= tol[active]
        lo_a, hi_a = lo[active], hi[active]
        hi_a = np.where(f > 0, xa, hi_a)
        lo_a = np.where(f > 0, lo_a, xa)
        fp = 1.0 + step * e * (1.0 - 2.0 * xa * xa * inv)
        xn = xa - f / fp
        xn = np.where((xn > lo_a) & (xn < hi_a), xn, 0.5 * (lo_a + hi_a))
        stuck = xn == xa
        xn = np.where(done, xa, xn)
        x[active], lo[active], hi[active] = xn, lo_a, hi_a
        idx = np.flatnonzero(active)
        active[idx[done | stuck]] = False
    else:
        if active.any():
            raise ArithmeticError("Welsch prox did not converge")
    return np.copysign(x, y)
