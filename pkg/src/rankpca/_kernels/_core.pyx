# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: truncated power iteration and elastic-net coordinate descent.

Mirrors ``fallback.py`` exactly (same updates, same stable tie-break); see
that module for the semantics.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()

STATUS_OK = 0
STATUS_ZERO_PRODUCT = 1


cdef inline double _norm2(double[::1] v) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0
    for i in range(v.shape[0]):
        s += v[i] * v[i]
    return sqrt(s)


cdef void _topk(double[::1] x, Py_ssize_t k, double[::1] vals, Py_ssize_t[::1] idx) noexcept nogil:
    """Indices of the k largest |x| entries; equal magnitudes keep the lowest index.

    Insertion keeps ``vals`` sorted descending; a new value only displaces
    strictly smaller ones, so earlier indices win ties (same selection as a
    stable descending argsort).
    """
    cdef Py_ssize_t d = x.shape[0]
    cdef Py_ssize_t filled = 0
    cdef Py_ssize_t j, pos
    cdef double v
    for j in range(d):
        v = fabs(x[j])
        if filled < k:
            pos = filled
            while pos > 0 and vals[pos - 1] < v:
                vals[pos] = vals[pos - 1]
                idx[pos] = idx[pos - 1]
                pos -= 1
            vals[pos] = v
            idx[pos] = j
            filled += 1
        elif v > vals[k - 1]:
            pos = k - 1
            while pos > 0 and vals[pos - 1] < v:
                vals[pos] = vals[pos - 1]
                idx[pos] = idx[pos - 1]
                pos -= 1
            vals[pos] = v
            idx[pos] = j


def tpower_loop(double[:, ::1] gamma, double[::1] x0, Py_ssize_t k,
                double conv_tol, Py_ssize_t max_iters):
    """Compiled twin of ``fallback.tpower_loop``."""
    cdef Py_ssize_t d = gamma.shape[0]
    cdef cnp.ndarray theta_arr = np.array(x0, dtype=np.float64)
    cdef double[::1] theta = theta_arr
    cdef cnp.ndarray y_arr = np.empty(d, dtype=np.float64)
    cdef double[::1] y = y_arr
    cdef cnp.ndarray xt_arr = np.empty(d, dtype=np.float64)
    cdef double[::1] xt = xt_arr
    cdef cnp.ndarray trace_arr = np.empty(max_iters, dtype=np.float64)
    cdef double[::1] trace = trace_arr
    cdef cnp.ndarray vals_arr = np.empty(k, dtype=np.float64)
    cdef double[::1] vals = vals_arr
    cdef cnp.ndarray idx_arr = np.empty(k, dtype=np.intp)
    cdef Py_ssize_t[::1] idx = idx_arr

    cdef Py_ssize_t t, i, j, iterations = 0
    cdef double ny, nt, acc, dm, dp, diff, obj
    cdef bint converged = False
    cdef int status = STATUS_OK

    with nogil:
        for i in range(d):
            acc = 0.0
            for j in range(d):
                acc += gamma[i, j] * theta[j]
            y[i] = acc
        for t in range(max_iters):
            ny = _norm2(y)
            if ny == 0.0:
                status = 1  # STATUS_ZERO_PRODUCT
                break
            # xt <- truncated, renormalized y / ny
            _topk(y, k, vals, idx)
            for i in range(d):
                xt[i] = 0.0
            for i in range(k):
                xt[idx[i]] = y[idx[i]] / ny
            nt = _norm2(xt)
            dm = 0.0
            dp = 0.0
            for i in range(d):
                xt[i] /= nt
                dm += (xt[i] - theta[i]) * (xt[i] - theta[i])
                dp += (xt[i] + theta[i]) * (xt[i] + theta[i])
            diff = sqrt(dm if dm < dp else dp)
            obj = 0.0
            for i in range(d):
                theta[i] = xt[i]
            for i in range(d):
                acc = 0.0
                for j in range(d):
                    acc += gamma[i, j] * theta[j]
                y[i] = acc
                obj += theta[i] * acc
            trace[t] = obj
            iterations = t + 1
            if diff <= conv_tol:
                converged = True
                break

    return theta_arr, iterations, bool(converged), trace_arr[:iterations].copy(), status


def enet_cd(double[:, ::1] A, double[::1] b, double threshold, double[::1] w0,
            double tol, Py_ssize_t max_sweeps):
    """Compiled twin of ``fallback.enet_cd``."""
    cdef Py_ssize_t d = A.shape[0]
    cdef cnp.ndarray w_arr = np.array(w0, dtype=np.float64)
    cdef double[::1] w = w_arr
    cdef cnp.ndarray r_arr = np.empty(d, dtype=np.float64)
    cdef double[::1] r = r_arr

    cdef Py_ssize_t sweep, i, j, sweeps = 0
    cdef double acc, wj, z, az, new, delta, max_delta
    cdef bint converged = False

    with nogil:
        for i in range(d):
            acc = 0.0
            for j in range(d):
                acc += A[i, j] * w[j]
            r[i] = acc
        for sweep in range(max_sweeps):
            max_delta = 0.0
            for j in range(d):
                wj = w[j]
                z = b[j] - (r[j] - A[j, j] * wj)
                az = fabs(z) - threshold
                if az <= 0.0:
                    new = 0.0
                else:
                    new = az / A[j, j] if z > 0.0 else -az / A[j, j]
                if new != wj:
                    delta = new - wj
                    for i in range(d):
                        r[i] += A[j, i] * delta
                    w[j] = new
                    if fabs(delta) > max_delta:
                        max_delta = fabs(delta)
            sweeps = sweep + 1
            if max_delta <= tol:
                converged = True
                break

    return w_arr, sweeps, bool(converged)
