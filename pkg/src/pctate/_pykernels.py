"""Pure-numpy implementations of the hot kernels.

Used when the compiled ``_ckernels`` extension is unavailable or when
``PCTATE_PURE_PYTHON=1`` is set. Signatures and results match the Cython
module to within floating-point reassociation.
"""

import math

import numpy as np

from .errors import ConvergenceError

BACKEND = "python"


def hyp0f1(a, b, rtol=1e-15, max_terms=1_000_000):
    """Series for 0F1(;a;b), summed with Neumaier compensation."""
    if not a > 0:
        raise ValueError(f"hyp0f1 requires a > 0, got {a!r}")
    total = 1.0
    comp = 0.0
    term = 1.0
    quiet = 0
    for n in range(max_terms):
        term *= b / ((a + n) * (n + 1.0))
        t = total + term
        if abs(total) >= abs(term):
            comp += (total - t) + term
        else:
            comp += (term - t) + total
        total = t
        if abs(term) <= rtol * abs(total + comp):
            quiet += 1
            if quiet >= 3:
                return total + comp
        else:
            quiet = 0
        if not math.isfinite(total):
            break
    raise ConvergenceError(f"0F1 series did not converge for a={a!r}, b={b!r}")


def hc0_meat(X, e, f=None):
    """Sum over rows of e_i * f_i * x_i x_i' (f defaults to e)."""
    X = np.asarray(X, dtype=np.float64)
    e = np.asarray(e, dtype=np.float64)
    Xe = X * e[:, None]
    if f is None:
        out = Xe.T @ Xe
        return 0.5 * (out + out.T)
    Xf = X * np.asarray(f, dtype=np.float64)[:, None]
    return Xe.T @ Xf


def cluster_scores(X, e, codes, n_clusters):
    """Per-cluster score sums X_c' e_c, shape (n_clusters, K)."""
    X = np.asarray(X, dtype=np.float64)
    Xe = X * np.asarray(e, dtype=np.float64)[:, None]
    codes = np.asarray(codes, dtype=np.intp)
    out = np.empty((n_clusters, X.shape[1]))
    for k in range(X.shape[1]):
        out[:, k] = np.bincount(codes, weights=Xe[:, k], minlength=n_clusters)
    return out


def cluster_meat(X, e, codes, n_clusters):
    S = cluster_scores(X, e, codes, n_clusters)
    out = S.T @ S
    return 0.5 * (out + out.T)


def demean(A, codes, n_groups):
    """Subtract group means from every column of A (one-way within transform)."""
    A = np.asarray(A, dtype=np.float64)
    one_d = A.ndim == 1
    if one_d:
        A = A[:, None]
    codes = np.asarray(codes, dtype=np.intp)
    counts = np.bincount(codes, minlength=n_groups).astype(np.float64)
    counts[counts == 0] = 1.0
    out = np.empty_like(A)
    for k in range(A.shape[1]):
        means = np.bincount(codes, weights=A[:, k], minlength=n_groups) / counts
        out[:, k] = A[:, k] - means[codes]
    return out[:, 0] if one_d else out
