# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stepping kernel for quadratic programs.

Mirrors the loop contract of ``_kernels_py`` (see its docstring); the
whole recurrence runs without the GIL so batches of integrations can use
real thread parallelism.
"""

import numpy as np

from libc.math cimport fabs, isfinite, sqrt

BACKEND_NAME = "cython"

cdef int _EULER = 0
cdef int _STATUS_HORIZON = 0
cdef int _STATUS_KKT = 1
cdef int _STATUS_DIVERGED = 2
cdef int _STATUS_NONFINITE = 3

EULER = 0
RK4 = 1

STATUS_HORIZON = 0
STATUS_KKT = 1
STATUS_DIVERGED = 2
STATUS_NONFINITE = 3


cdef void _eval(const double[:, ::1] P, const double[::1] q,
                const double[:, :, ::1] A, const double[:, ::1] b,
                const double[::1] d, const double[::1] x,
                const double[::1] lam, double[::1] gx,
                double[::1] g) noexcept nogil:
    # gx <- q - P x - sum_r lam_r (A_r x + b_r);  g_r <- x.A_r x / 2 + b_r.x + d_r
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t m = lam.shape[0]
    cdef Py_ssize_t i, j, r
    cdef double acc, ax
    for i in range(n):
        acc = q[i]
        for j in range(n):
            acc -= P[i, j] * x[j]
        gx[i] = acc
    for r in range(m):
        acc = d[r]
        for i in range(n):
            ax = 0.0
            for j in range(n):
                ax += A[r, i, j] * x[j]
            acc += (0.5 * ax + b[r, i]) * x[i]
            gx[i] -= lam[r] * (ax + b[r, i])
        g[r] = acc


cdef double _kkt_total(const double[::1] gx, const double[::1] g,
                       const double[::1] lam) noexcept nogil:
    cdef Py_ssize_t i
    cdef double stat = 0.0, prim = 0.0, comp = 0.0, total
    for i in range(gx.shape[0]):
        stat += gx[i] * gx[i]
    stat = sqrt(stat)
    for i in range(g.shape[0]):
        if g[i] > 0.0:
            prim += g[i] * g[i]
        comp += lam[i] * g[i]
    prim = sqrt(prim)
    comp = fabs(comp)
    total = stat
    if prim > total:
        total = prim
    if comp > total:
        total = comp
    return total


def run_quadratic(P_in, q_in, A_in, b_in, d_in, x0, lam0, double h,
                  Py_ssize_t n_steps, Py_ssize_t stride, int scheme,
                  k1_in, k2_in, double stop_tol, double guard):
    """Same contract as ``_kernels_py.run_quadratic``."""
    cdef const double[:, ::1] P = np.ascontiguousarray(P_in, dtype=np.float64)
    cdef const double[::1] q = np.ascontiguousarray(q_in, dtype=np.float64)
    cdef const double[:, :, ::1] A = np.ascontiguousarray(A_in, dtype=np.float64)
    cdef const double[:, ::1] b = np.ascontiguousarray(b_in, dtype=np.float64)
    cdef const double[::1] d = np.ascontiguousarray(d_in, dtype=np.float64)
    cdef const double[::1] k1 = np.ascontiguousarray(k1_in, dtype=np.float64)
    cdef const double[::1] k2 = np.ascontiguousarray(k2_in, dtype=np.float64)

    cdef Py_ssize_t n = P.shape[0]
    cdef Py_ssize_t m = A.shape[0]

    x_arr = np.array(x0, dtype=np.float64)
    lam_arr = np.array(lam0, dtype=np.float64)
    cdef double[::1] x = x_arr
    cdef double[::1] lam = lam_arr

    cdef Py_ssize_t cap = n_steps // stride + 3
    times_arr = np.empty(cap, dtype=np.float64)
    xs_arr = np.empty((cap, n), dtype=np.float64)
    lams_arr = np.empty((cap, m), dtype=np.float64)
    masks_arr = np.zeros((cap, m), dtype=np.uint8)
    cdef double[::1] times = times_arr
    cdef double[:, ::1] xs = xs_arr
    cdef double[:, ::1] lams = lams_arr
    cdef unsigned char[:, ::1] masks = masks_arr

    scratch = np.empty((10, max(n, m, 1)), dtype=np.float64)
    cdef double[::1] gx = scratch[0, :n]
    cdef double[::1] g = scratch[1, :m]
    cdef double[::1] gx_s = scratch[2, :n]
    cdef double[::1] g_s = scratch[3, :m]
    cdef double[::1] sx = scratch[4, :n]
    cdef double[::1] sl = scratch[5, :m]
    cdef double[::1] accx = scratch[6, :n]
    cdef double[::1] accl = scratch[7, :m]
    cdef double[::1] tx = scratch[8, :n]
    cdef double[::1] tl = scratch[9, :m]

    cdef Py_ssize_t nrec = 0
    cdef Py_ssize_t k = 0
    cdef Py_ssize_t i, r
    cdef int status = _STATUS_HORIZON
    cdef bint recorded, ok
    cdef double norm2, t_bad = 0.0
    cdef bint failed = False

    with nogil:
        while True:
            _eval(P, q, A, b, d, x, lam, gx, g)
            ok = True
            for i in range(n):
                if not isfinite(gx[i]):
                    ok = False
            for r in range(m):
                if not isfinite(g[r]):
                    ok = False
            if not ok:
                status = _STATUS_NONFINITE
                t_bad = k * h
                failed = True
                break

            recorded = (k % stride == 0) or (k == n_steps)
            if recorded:
                times[nrec] = k * h
                for i in range(n):
                    xs[nrec, i] = x[i]
                for r in range(m):
                    lams[nrec, r] = lam[r]
                    masks[nrec, r] = 1 if (lam[r] == 0.0 and g[r] < 0.0) else 0
                nrec += 1
            if _kkt_total(gx, g, lam) < stop_tol:
                if not recorded:
                    times[nrec] = k * h
                    for i in range(n):
                        xs[nrec, i] = x[i]
                    for r in range(m):
                        lams[nrec, r] = lam[r]
                        masks[nrec, r] = 1 if (lam[r] == 0.0 and g[r] < 0.0) else 0
                    nrec += 1
                status = _STATUS_KKT
                break
            if k == n_steps:
                break

            if scheme == _EULER:
                for i in range(n):
                    x[i] = x[i] + h * (k1[i] * gx[i])
                for r in range(m):
                    lam[r] = lam[r] + h * (k2[r] * g[r])
                    if lam[r] < 0.0:
                        lam[r] = 0.0
            else:
                # stage 1 reuses (gx, g) computed at (x, lam)
                for i in range(n):
                    sx[i] = k1[i] * gx[i]
                    accx[i] = sx[i]
                for r in range(m):
                    sl[r] = k2[r] * g[r]
                    accl[r] = sl[r]
                # stage 2
                for i in range(n):
                    tx[i] = x[i] + 0.5 * h * sx[i]
                for r in range(m):
                    tl[r] = lam[r] + 0.5 * h * sl[r]
                    if tl[r] < 0.0:
                        tl[r] = 0.0
                _eval(P, q, A, b, d, tx, tl, gx_s, g_s)
                for i in range(n):
                    sx[i] = k1[i] * gx_s[i]
                    accx[i] += 2.0 * sx[i]
                for r in range(m):
                    sl[r] = k2[r] * g_s[r]
                    accl[r] += 2.0 * sl[r]
                # stage 3
                for i in range(n):
                    tx[i] = x[i] + 0.5 * h * sx[i]
                for r in range(m):
                    tl[r] = lam[r] + 0.5 * h * sl[r]
                    if tl[r] < 0.0:
                        tl[r] = 0.0
                _eval(P, q, A, b, d, tx, tl, gx_s, g_s)
                for i in range(n):
                    sx[i] = k1[i] * gx_s[i]
                    accx[i] += 2.0 * sx[i]
                for r in range(m):
                    sl[r] = k2[r] * g_s[r]
                    accl[r] += 2.0 * sl[r]
                # stage 4
                for i in range(n):
                    tx[i] = x[i] + h * sx[i]
                for r in range(m):
                    tl[r] = lam[r] + h * sl[r]
                    if tl[r] < 0.0:
                        tl[r] = 0.0
                _eval(P, q, A, b, d, tx, tl, gx_s, g_s)
                for i in range(n):
                    accx[i] += k1[i] * gx_s[i]
                    x[i] = x[i] + (h / 6.0) * accx[i]
                for r in range(m):
                    accl[r] += k2[r] * g_s[r]
                    lam[r] = lam[r] + (h / 6.0) * accl[r]
                    if lam[r] < 0.0:
                        lam[r] = 0.0
            k += 1

            norm2 = 0.0
            for i in range(n):
                norm2 += x[i] * x[i]
            for r in range(m):
                norm2 += lam[r] * lam[r]
            if norm2 > guard * guard:
                status = _STATUS_DIVERGED
                t_bad = k * h
                failed = True
                break

    if failed:
        t_fail, x_fail, lam_fail = t_bad, x_arr.copy(), lam_arr.copy()
    else:
        t_fail = x_fail = lam_fail = None
    return (status, times_arr[:nrec].copy(), xs_arr[:nrec].copy(),
            lams_arr[:nrec].copy(), masks_arr[:nrec].astype(bool),
            t_fail, x_fail, lam_fail)
