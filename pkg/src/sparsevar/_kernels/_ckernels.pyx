# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Semantics must match ``_pykernels`` exactly."""

from libc.math cimport fabs, sqrt


def lasso_cd_gram(double[:, ::1] G, double[:, ::1] C, double[:, ::1] W,
                  double[:, ::1] pen, int max_iter, double tol):
    """Cyclic coordinate descent on ``sum_i w_i G w_i' - 2 w_i c_i + pen_i |w_i|``.

    Rows of ``W`` are independent problems sharing the Gram matrix ``G``.
    ``W`` is updated in place. Returns ``(sweeps, converged)`` where sweeps
    is the largest sweep count over rows.
    """
    cdef Py_ssize_t k = W.shape[0]
    cdef Py_ssize_t d = W.shape[1]
    cdef Py_ssize_t i, j, l
    cdef int it, worst = 0
    cdef bint all_conv = True, conv
    cdef double q, wj, new, delta, maxdelta, maxw, thr
    cdef double[::1] r
    import numpy as np
    r_arr = np.empty(d, dtype=np.float64)
    r = r_arr
    with nogil:
        for i in range(k):
            for j in range(d):
                q = C[i, j]
                for l in range(d):
                    q -= G[j, l] * W[i, l]
                r[j] = q
            conv = False
            it = 0
            while it < max_iter:
                it += 1
                maxdelta = 0.0
                maxw = 0.0
                for j in range(d):
                    wj = W[i, j]
                    if G[j, j] <= 0.0:
                        new = 0.0
                    else:
                        q = r[j] + G[j, j] * wj
                        thr = 0.5 * pen[i, j]
                        if q > thr:
                            new = (q - thr) / G[j, j]
                        elif q < -thr:
                            new = (q + thr) / G[j, j]
                        else:
                            new = 0.0
                    delta = new - wj
                    if delta != 0.0:
                        W[i, j] = new
                        for l in range(d):
                            r[l] -= delta * G[l, j]
                        if fabs(delta) > maxdelta:
                            maxdelta = fabs(delta)
                    if fabs(new) > maxw:
                        maxw = fabs(new)
                if maxdelta == 0.0 or maxdelta <= tol * maxw:
                    conv = True
                    break
            if it > worst:
                worst = it
            if not conv:
                all_conv = False
    return worst, all_conv


def group_sweep(double[::1] v, long long[::1] idx, long long[::1] ptr, double[::1] thr):
    """Sequential block soft-thresholding of ``v`` in place, group by group.

    Group ``g`` covers ``v[idx[ptr[g]:ptr[g + 1]]]`` with threshold ``thr[g]``.
    """
    cdef Py_ssize_t g, a, n_groups = thr.shape[0]
    cdef double nrm, scale
    with nogil:
        for g in range(n_groups):
            nrm = 0.0
            for a in range(ptr[g], ptr[g + 1]):
                nrm += v[idx[a]] * v[idx[a]]
            nrm = sqrt(nrm)
            if nrm <= thr[g]:
                for a in range(ptr[g], ptr[g + 1]):
                    v[idx[a]] = 0.0
            elif thr[g] > 0.0:
                scale = 1.0 - thr[g] / nrm
                for a in range(ptr[g], ptr[g + 1]):
                    v[idx[a]] *= scale
