# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled away-step Frank-Wolfe kernel.

Same algorithm and return contract as ``_fw_py.fw_run``; the whole iteration
loop runs without the GIL so ``batch_project`` threads scale.
"""

from libc.math cimport INFINITY
from scipy.linalg.cython_blas cimport dgemv, ddot, daxpy, dscal, dcopy

import numpy as np

cdef enum:
    CONVERGED = 0
    MAX_ITER = 1
    STALLED = 2


cdef inline double _dot(int n, double* x, double* y) noexcept nogil:
    cdef int one = 1
    return ddot(&n, x, &one, y, &one)


cdef int _run(const double[:, ::1] V, const double[::1] q, double[::1] alpha, double[::1] p,
              double gap_tol, long max_iter, bint exact, double* trace,
              double[::1] g, double[::1] r, double[::1] d, double[::1] rn,
              long* iters, double* gap_out) noexcept nogil:
    cdef int n = <int>V.shape[0]
    cdef int dim = <int>V.shape[1]
    cdef int one = 1
    cdef double done = 1.0, dzero = 0.0, dmone = -1.0
    cdef char trans_t = b'T'
    cdef char trans_n = b'N'
    cdef long it = 0
    cdef int i, s, v
    cdef double ga, gs, gv, gap, away_gap, dd, rd, step, gmax, scale
    cdef bint fresh = False, away

    dcopy(&dim, &p[0], &one, &r[0], &one)
    daxpy(&dim, &dmone, <double*>&q[0], &one, &r[0], &one)
    gap = INFINITY

    while True:
        # g = V @ r ; V is row-major so it is the transposed column-major matrix
        dgemv(&trans_t, &dim, &n, &done, <double*>&V[0, 0], &dim, &r[0], &one, &dzero, &g[0], &one)
        ga = 0.0
        s = 0
        gs = g[0]
        v = -1
        gv = -INFINITY
        for i in range(n):
            if alpha[i] > 0.0:
                ga += g[i] * alpha[i]
                if g[i] > gv:
                    gv = g[i]
                    v = i
            if g[i] < gs:
                gs = g[i]
                s = i
        gap = 2.0 * (ga - gs)
        if gap <= gap_tol:
            if fresh:
                iters[0] = it
                gap_out[0] = gap
                return CONVERGED
            dgemv(&trans_n, &dim, &n, &done, <double*>&V[0, 0], &dim, &alpha[0], &one, &dzero, &p[0], &one)
            dcopy(&dim, &p[0], &one, &r[0], &one)
            daxpy(&dim, &dmone, <double*>&q[0], &one, &r[0], &one)
            fresh = True
            continue
        if it >= max_iter:
            iters[0] = it
            gap_out[0] = gap
            return MAX_ITER

        away = False
        if exact and v >= 0:
            away_gap = 2.0 * (gv - ga)
            away = away_gap > gap and alpha[v] < 1.0
        if away:
            # d = p - V[v]
            dcopy(&dim, &p[0], &one, &d[0], &one)
            daxpy(&dim, &dmone, <double*>&V[v, 0], &one, &d[0], &one)
            gmax = alpha[v] / (1.0 - alpha[v])
        else:
            # d = V[s] - p
            dcopy(&dim, <double*>&V[s, 0], &one, &d[0], &one)
            daxpy(&dim, &dmone, &p[0], &one, &d[0], &one)
            gmax = 1.0
        dd = _dot(dim, &d[0], &d[0])
        rd = _dot(dim, &r[0], &d[0])
        if dd == 0.0 or rd >= 0.0:
            iters[0] = it
            gap_out[0] = gap
            return STALLED
        step = -rd / dd
        if not exact and step > 2.0 / (it + 2.0):
            step = 2.0 / (it + 2.0)
        if step > gmax:
            step = gmax
        dcopy(&dim, &r[0], &one, &rn[0], &one)
        daxpy(&dim, &step, &d[0], &one, &rn[0], &one)

        if away:
            scale = 1.0 + step
            dscal(&n, &scale, &alpha[0], &one)
            alpha[v] -= step
            if step == gmax or alpha[v] < 0.0:
                alpha[v] = 0.0
        else:
            if step == 1.0:
                for i in range(n):
                    alpha[i] = 0.0
                alpha[s] = 1.0
            else:
                scale = 1.0 - step
                dscal(&n, &scale, &alpha[0], &one)
                alpha[s] += step
        daxpy(&dim, &step, &d[0], &one, &p[0], &one)
        dcopy(&dim, &rn[0], &one, &r[0], &one)
        fresh = False
        if trace != NULL:
            trace[it] = _dot(dim, &r[0], &r[0])
        it += 1


def fw_run(const double[:, ::1] V, const double[::1] q, double[::1] alpha, double[::1] p,
           double gap_tol, long max_iter, bint exact=True, trace=None):
    cdef int dim = <int>V.shape[1]
    cdef double[::1] g = np.empty(V.shape[0])
    cdef double[::1] r = np.empty(dim)
    cdef double[::1] d = np.empty(dim)
    cdef double[::1] rn = np.empty(dim)
    cdef double[::1] tr
    cdef double* trace_ptr = NULL
    cdef long iters = 0
    cdef double gap = 0.0
    cdef int status
    if trace is not None:
        tr = trace
        if tr.shape[0] < max_iter:
            raise ValueError("trace buffer shorter than max_iter")
        trace_ptr = &tr[0]
    with nogil:
        status = _run(V, q, alpha, p, gap_tol, max_iter, exact, trace_ptr,
                      g, r, d, rn, &iters, &gap)
    return iters, gap, status
