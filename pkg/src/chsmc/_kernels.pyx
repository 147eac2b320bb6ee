# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: samplewise scalar resolvents and the per-mode solve."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, log1p, cbrt, copysign, fmin, fmax

cnp.import_array()

DEF ZERO = 0
DEF POLYNOMIAL = 1
DEF OBSTACLE = 2
DEF LOGARITHMIC = 3
DEF RESIDUAL_TOL = 1e-12
DEF MAX_ITER = 200
DEF ULP = 2.220446049250313e-16


cdef inline int _solve_one(int kind, double eps, double r, double* out) noexcept nogil:
    cdef double lo, hi, x, h, dh, step, xn, scale
    cdef int it
    if r == 0.0:
        out[0] = 0.0
        return 0
    lo = fmin(r, 0.0)
    hi = fmax(r, 0.0)
    if kind == POLYNOMIAL:
        x = copysign(fmin(fabs(r), cbrt(fabs(r) / eps)), r)
    else:
        lo = fmax(lo, -1.0)
        hi = fmin(hi, 1.0)
        x = 0.5 * (lo + hi)
    for it in range(MAX_ITER):
        if kind == POLYNOMIAL:
            h = x + eps * x * x * x - r
            dh = 1.0 + 3.0 * eps * x * x
        else:
            h = x + eps * (log1p(x) - log1p(-x)) - r
            dh = 1.0 + 2.0 * eps / ((1.0 - x) * (1.0 + x))
        if h > 0:
            hi = x
        else:
            lo = x
        step = h / dh
        xn = x - step
        if not (xn > lo and xn < hi):
            xn = 0.5 * (lo + hi)
        scale = fmax(fabs(x), 1e-300)
        if (fabs(h) <= RESIDUAL_TOL * fmin(1.0, fabs(r)) or fabs(step) <= 4 * ULP * scale
                or hi - lo <= 4 * ULP * fmax(fabs(lo), fabs(hi))):
            out[0] = x
            return 0
        x = xn
    out[0] = x
    return 1


def resolvent(int kind, double eps, r):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rf
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xf
    cdef Py_ssize_t i, n
    cdef int nfail = 0
    arr = np.array(r, dtype=np.float64)
    if kind == ZERO:
        return arr, 0
    if kind == OBSTACLE:
        return np.clip(arr, -1.0, 1.0), 0
    rf = np.ascontiguousarray(arr.ravel())
    n = rf.shape[0]
    xf = np.empty(n, dtype=np.float64)
    with nogil:
        for i in range(n):
            nfail += _solve_one(kind, eps, rf[i], &xf[i])
    return xf.reshape(arr.shape), nfail


def solve_modes(lam, double tau, double ell, double nu, double gamma, double stab, r1, r2):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] lf = np.ascontiguousarray(np.ravel(lam), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] af = np.ascontiguousarray(np.ravel(r1), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] bf = np.ascontiguousarray(np.ravel(r2), dtype=np.float64)
    cdef Py_ssize_t i, n = lf.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] th = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ph = np.empty(n, dtype=np.float64)
    cdef double tl, m11, m22, det
    with nogil:
        for i in range(n):
            tl = tau * lf[i]
            m11 = 1.0 + tl
            m22 = 1.0 + tl * (nu * lf[i] + stab)
            det = m11 * m22 + ell * gamma * tl
            th[i] = (m22 * af[i] - ell * bf[i]) / det
            ph[i] = (m11 * bf[i] + gamma * tl * af[i]) / det
    shape = np.shape(r1)
    return th.reshape(shape), ph.reshape(shape)
