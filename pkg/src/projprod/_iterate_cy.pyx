# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled product-iteration kernel.

Same contract as projprod._iterate_py.run_product_iteration; the factored
projector applications go through BLAS dgemv on the padded factor stack.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt
from scipy.linalg.cython_blas cimport dgemv

cnp.import_array()


cdef inline double _nrm2(double* v, int d) noexcept nogil:
    cdef double s = 0.0
    cdef int i
    for i in range(d):
        s += v[i] * v[i]
    return sqrt(s)


cdef inline double _dist(double* a, double* b, int d) noexcept nogil:
    cdef double s = 0.0, t
    cdef int i
    for i in range(d):
        t = a[i] - b[i]
        s += t * t
    return sqrt(s)


cdef inline double _dot_row(double[:, ::1] mat, int row, double* v,
                            int d) noexcept nogil:
    cdef double s = 0.0
    cdef int i
    for i in range(d):
        s += mat[row, i] * v[i]
    return s


def run_product_iteration(double[:, :, ::1] q_stack, long long[::1] ks,
                          long long[::1] labels, double[::1] x0,
                          double[::1] px0, double stop_tol, int ring_w,
                          long long[::1] snapshot_steps,
                          double[:, ::1] probes, bint keep_iterates):
    cdef int d = x0.shape[0]
    cdef int kmax = q_stack.shape[2]
    cdef Py_ssize_t t_max = labels.shape[0]
    cdef int n_probe = probes.shape[0]
    cdef Py_ssize_t n_snap = snapshot_steps.shape[0]

    norms_arr = np.empty(t_max + 1)
    step_res_arr = np.zeros(t_max + 1)
    dist_arr = np.empty(t_max + 1)
    gaps_arr = np.zeros(t_max + 1)
    ring_arr = np.zeros((ring_w, d))
    ring_steps_arr = np.full(ring_w, -1, dtype=np.int64)
    snaps_arr = np.zeros((n_snap if n_snap else 1, d))
    probe_dots_arr = np.empty((t_max + 1, n_probe if n_probe else 1))
    iterates_arr = np.empty((t_max + 1 if keep_iterates else 1, d))

    cdef double[::1] norms = norms_arr
    cdef double[::1] step_res = step_res_arr
    cdef double[::1] dist = dist_arr
    cdef double[::1] gaps = gaps_arr
    cdef double[:, ::1] ring = ring_arr
    cdef long long[::1] ring_steps = ring_steps_arr
    cdef double[:, ::1] snaps = snaps_arr
    cdef double[:, ::1] probe_dots = probe_dots_arr
    cdef double[:, ::1] iterates = iterates_arr

    x_arr = np.array(x0, dtype=float, copy=True)
    cdef double[::1] x = x_arr
    xprev_arr = np.empty(d)
    cdef double[::1] xprev = xprev_arr
    y_arr = np.empty(kmax if kmax else 1)
    cdef double[::1] y = y_arr

    cdef double* xp = &x[0]
    cdef double* xpp = &xprev[0]
    cdef double* yp = &y[0] if kmax else NULL
    cdef double* pxp = &px0[0]

    cdef Py_ssize_t n, sp = 0, steps = t_max
    cdef int i, k, slot, inc = 1, m_rows, n_cols
    cdef double alpha = 1.0, beta = 0.0, res
    cdef double* qp

    norms[0] = _nrm2(xp, d)
    dist[0] = _dist(xp, pxp, d)
    for i in range(d):
        ring[0, i] = x[i]
    ring_steps[0] = 0
    if sp < n_snap and snapshot_steps[sp] == 0:
        for i in range(d):
            snaps[sp, i] = x[i]
        sp += 1
    if n_probe:
        for i in range(n_probe):
            probe_dots[0, i] = _dot_row(probes, i, xp, d)
    if keep_iterates:
        for i in range(d):
            iterates[0, i] = x[i]

    for n in range(1, t_max + 1):
        slot = <int>labels[n - 1]
        k = <int>ks[slot]
        for i in range(d):
            xprev[i] = x[i]
        if k == 0:
            for i in range(d):
                x[i] = 0.0
        else:
            # The C-order (d, kmax) factor reads, in Fortran terms, as the
            # (kmax, d) transposed matrix with lda = kmax.
            qp = &q_stack[slot, 0, 0]
            m_rows = k
            n_cols = d
            dgemv("N", &m_rows, &n_cols, &alpha, qp, &kmax, xpp, &inc,
                  &beta, yp, &inc)
            dgemv("T", &m_rows, &n_cols, &alpha, qp, &kmax, yp, &inc,
                  &beta, xp, &inc)
        norms[n] = _nrm2(xp, d)
        res = _dist(xp, xpp, d)
        step_res[n] = res
        gaps[n] = fabs(norms[n - 1] * norms[n - 1] - norms[n] * norms[n]
                       - res * res)
        dist[n] = _dist(xp, pxp, d)
        for i in range(d):
            ring[n % ring_w, i] = x[i]
        ring_steps[n % ring_w] = n
        if sp < n_snap and snapshot_steps[sp] == n:
            for i in range(d):
                snaps[sp, i] = x[i]
            sp += 1
        if n_probe:
            for i in range(n_probe):
                probe_dots[n, i] = _dot_row(probes, i, xp, d)
        if keep_iterates:
            for i in range(d):
                iterates[n, i] = x[i]
        if dist[n] <= stop_tol:
            steps = n
            break

    t = steps
    return {
        "steps": t,
        "norms": norms_arr[:t + 1],
        "step_res": step_res_arr[:t + 1],
        "dist": dist_arr[:t + 1],
        "gaps": gaps_arr[:t + 1],
        "ring": ring_arr,
        "ring_steps": ring_steps_arr,
        "snaps": snaps_arr[:n_snap],
        "snaps_filled": sp,
        "probe_dots": probe_dots_arr[:t + 1] if n_probe else None,
        "iterates": iterates_arr[:t + 1] if keep_iterates else None,
        "x_final": x_arr,
    }
