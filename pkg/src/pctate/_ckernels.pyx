# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_pykernels`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabsl, isfinite

from .errors import ConvergenceError

cnp.import_array()

BACKEND = "cython"


def hyp0f1(double a, double b, double rtol=1e-15, long max_terms=1000000):
    """Series for 0F1(;a;b), accumulated in long double."""
    if not a > 0:
        raise ValueError(f"hyp0f1 requires a > 0, got {a!r}")
    cdef long double total = 1.0
    cdef long double term = 1.0
    cdef long double lb = b
    cdef long double la = a
    cdef long n
    cdef int quiet = 0
    for n in range(max_terms):
        term *= lb / ((la + n) * (n + 1.0))
        total += term
        if fabsl(term) <= rtol * fabsl(total):
            quiet += 1
            if quiet >= 3:
                return <double>total
        else:
            quiet = 0
        if not isfinite(<double>total):
            break
    raise ConvergenceError(f"0F1 series did not converge for a={a!r}, b={b!r}")


def hc0_meat(X, e, f=None):
    """Sum over rows of e_i * f_i * x_i x_i' (f defaults to e)."""
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[::1] ev = np.ascontiguousarray(e, dtype=np.float64)
    cdef const double[::1] fv
    cdef Py_ssize_t n = x.shape[0], K = x.shape[1], i, k, l
    cdef bint sym = f is None
    if sym:
        fv = ev
    else:
        fv = np.ascontiguousarray(f, dtype=np.float64)
    out_arr = np.zeros((K, K), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double w, xk
    with nogil:
        if sym:
            # lower triangle only, mirrored afterwards
            for i in range(n):
                w = ev[i] * ev[i]
                for k in range(K):
                    xk = x[i, k] * w
                    for l in range(k + 1):
                        out[k, l] += xk * x[i, l]
            for k in range(K):
                for l in range(k):
                    out[l, k] = out[k, l]
        else:
            for i in range(n):
                w = ev[i] * fv[i]
                for k in range(K):
                    xk = x[i, k] * w
                    for l in range(K):
                        out[k, l] += xk * x[i, l]
    return out_arr


def cluster_scores(X, e, codes, Py_ssize_t n_clusters):
    """Per-cluster score sums X_c' e_c, shape (n_clusters, K)."""
    cdef const double[:, :] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:] ev = np.ascontiguousarray(e, dtype=np.float64)
    cdef const cnp.intp_t[:] cv = np.ascontiguousarray(codes, dtype=np.intp)
    cdef Py_ssize_t n = x.shape[0], K = x.shape[1], i, k, c
    out_arr = np.zeros((n_clusters, K), dtype=np.float64)
    cdef double[:, :] out = out_arr
    with nogil:
        for i in range(n):
            c = cv[i]
            for k in range(K):
                out[c, k] += x[i, k] * ev[i]
    return out_arr


def cluster_meat(X, e, codes, Py_ssize_t n_clusters):
    S = cluster_scores(X, e, codes, n_clusters)
    out = S.T @ S
    return 0.5 * (out + out.T)


def demean(A, codes, Py_ssize_t n_groups):
    """Subtract group means from every column of A (one-way within transform)."""
    arr = np.asarray(A, dtype=np.float64)
    one_d = arr.ndim == 1
    if one_d:
        arr = arr[:, None]
    cdef const double[:, :] a = np.ascontiguousarray(arr)
    cdef const cnp.intp_t[:] cv = np.ascontiguousarray(codes, dtype=np.intp)
    cdef Py_ssize_t n = a.shape[0], K = a.shape[1], i, k, g
    sums_arr = np.zeros((n_groups, K), dtype=np.float64)
    counts_arr = np.zeros(n_groups, dtype=np.float64)
    out_arr = np.empty((n, K), dtype=np.float64)
    cdef double[:, :] sums = sums_arr
    cdef double[:] counts = counts_arr
    cdef double[:, :] out = out_arr
    with nogil:
        for i in range(n):
            g = cv[i]
            counts[g] += 1.0
            for k in range(K):
                sums[g, k] += a[i, k]
        for g in range(n_groups):
            if counts[g] > 0:
                for k in range(K):
                    sums[g, k] /= counts[g]
        for i in range(n):
            g = cv[i]
            for k in range(K):
                out[i, k] = a[i, k] - sums[g, k]
    return out_arr[:, 0] if one_d else out_arr
