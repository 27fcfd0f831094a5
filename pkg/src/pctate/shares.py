"""Subgroup shares of the treated population and their covariance."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, InvalidShare, MissingGroup


@dataclass(frozen=True)
class ShareEstimates:
    """Estimated shares ``w_hat`` with covariance ``cov_w`` of the estimator.

    ``n_treated`` is 0 for externally supplied (fixed) weights.
    """

    w_hat: np.ndarray
    cov_w: np.ndarray
    n_treated: int
    group_counts: np.ndarray
    renormalized: bool = False

    @property
    def n_groups(self):
        return self.w_hat.shape[0]

    def subset(self, idx):
        """Shares re-estimated on a subset of groups (counts-based only)."""
        idx = list(idx)
        if self.n_treated == 0:
            return fixed_shares(self.w_hat[idx])
        return estimate_shares(self.group_counts[idx])


def estimate_shares(group_counts) -> ShareEstimates:
    """Shares N_g / N_S with covariance (diag(w) - w w') / N_S.

    The covariance is the HC0 covariance of the no-intercept regression of
    each subgroup dummy on the treatment indicator.

    >>> s = estimate_shares([2, 3, 5])
    >>> s.w_hat.tolist(), round(float(s.cov_w[0, 0]), 6)
    ([0.2, 0.3, 0.5], 0.016)
    """
    counts = np.asarray(group_counts)
    if counts.ndim != 1 or counts.size == 0:
        raise EmptyInput("no subgroups to estimate shares for")
    if np.any(counts != np.round(counts)) or np.any(counts < 0):
        raise InvalidShare("group counts must be nonnegative integers")
    counts = counts.astype(np.int64)
    zero = np.flatnonzero(counts == 0).tolist()
    if zero:
        raise MissingGroup(zero, f"zero observations in group position(s) {zero}")
    n_s = int(counts.sum())
    w = counts / n_s
    cov = (np.diag(w) - np.outer(w, w)) / n_s
    return ShareEstimates(w, cov, n_s, counts)


def fixed_shares(w) -> ShareEstimates:
    """Known weights, treated as constants (zero covariance).

    Weights that do not sum to one are renormalized with a warning.
    """
    w = np.asarray(w, dtype=np.float64).ravel()
    if w.size == 0:
        raise EmptyInput("no weights given")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise InvalidShare("share weights must be finite and strictly positive")
    total = w.sum()
    renorm = abs(total - 1.0) > 1e-9
    if renorm:
        warnings.warn(f"weights sum to {total:g}; renormalizing", UserWarning, stacklevel=2)
    w = w / total
    g = w.size
    return ShareEstimates(w, np.zeros((g, g)), 0, np.zeros(g, dtype=np.int64), renorm)
