"""Point estimators of the average effect in percentage points.

Inputs are subgroup log-point effects ``tau_hat`` with covariance ``cov_tau``
and subgroup shares. All outputs are proportions (0.05 means 5 percent).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DimensionError, InvalidCovariance
from .shares import ShareEstimates


@dataclass(frozen=True)
class EffectEstimates:
    """Subgroup effects in log points.

    Parameters
    ----------
    tau_hat : ndarray, shape (G,)
    cov_tau : ndarray, shape (G, G)
        Covariance of ``tau_hat`` itself.
    residual_df : int
        Degrees of freedom of the variance estimate; enters ``rho_d``.
    cov_kind : str
        Which estimator produced ``cov_tau`` ("HC0", "CR1", "classical").
    labels : tuple, optional
    """

    tau_hat: np.ndarray
    cov_tau: np.ndarray
    residual_df: int
    cov_kind: str = "HC0"
    labels: tuple = ()

    def __post_init__(self):
        tau = np.atleast_1d(np.asarray(self.tau_hat, dtype=np.float64))
        cov = np.atleast_2d(np.asarray(self.cov_tau, dtype=np.float64))
        if tau.ndim != 1 or cov.shape != (tau.size, tau.size):
            raise DimensionError(f"cov_tau shape {cov.shape} does not match {tau.size} effects")
        object.__setattr__(self, "tau_hat", tau)
        object.__setattr__(self, "cov_tau", cov)

    @property
    def variances(self):
        return np.diag(self.cov_tau)

    def subset(self, idx):
        idx = list(idx)
        labels = tuple(self.labels[i] for i in idx) if self.labels else ()
        return EffectEstimates(
            self.tau_hat[idx], self.cov_tau[np.ix_(idx, idx)], self.residual_df, self.cov_kind, labels
        )


@dataclass(frozen=True)
class PointEstimates:
    tau_bar: float
    rho_a: float
    rho_b: float
    rho_c: float
    rho_d: float
    # rho_d's unbiasedness argument needs iid normal errors; flagged otherwise
    rho_d_approximate: bool = False


def _check(shares: ShareEstimates, effects: EffectEstimates):
    if shares.w_hat.shape[0] != effects.tau_hat.shape[0]:
        raise DimensionError(
            f"{shares.w_hat.shape[0]} shares but {effects.tau_hat.shape[0]} effects"
        )


def _variances(effects):
    v = effects.variances
    if np.any(v < 0):
        raise InvalidCovariance("negative variance on the diagonal of cov_tau")
    return v


def ate_log(shares: ShareEstimates, effects: EffectEstimates) -> float:
    """Share-weighted average effect in log points, w'tau."""
    _check(shares, effects)
    return float(shares.w_hat @ effects.tau_hat)


def rho_a(tau_bar: float) -> float:
    return float(np.expm1(tau_bar))


def rho_b(shares: ShareEstimates, effects: EffectEstimates) -> float:
    """Plug-in estimator sum_g w_g exp(tau_g) - 1."""
    _check(shares, effects)
    return float(shares.w_hat @ np.exp(effects.tau_hat) - 1.0)


def rho_c(shares: ShareEstimates, effects: EffectEstimates) -> float:
    """Plug-in with the log-normal mean correction exp(tau_g - var_g / 2)."""
    _check(shares, effects)
    v = _variances(effects)
    return float(shares.w_hat @ np.exp(effects.tau_hat - 0.5 * v) - 1.0)


def hyp0f1(a: float, b: float) -> float:
    """Confluent hypergeometric limit function 0F1(;a;b) by its power series.

    Terms follow t_{n+1} = t_n * b / ((a + n)(n + 1)); summation stops once
    three consecutive terms fall below 1e-15 of the running sum. Intended for
    moderate |b|/a; large negative b loses accuracy to cancellation.
    """
    return kernels.hyp0f1(float(a), float(b))


def rho_d(shares: ShareEstimates, effects: EffectEstimates) -> float:
    """Exactly unbiased estimator under iid normal errors.

    Replaces the correction factor exp(-var_g / 2) of ``rho_c`` by
    0F1(m/2; -(m/2) var_g / 2), m being the residual degrees of freedom.
    """
    _check(shares, effects)
    v = _variances(effects)
    m = effects.residual_df
    if m < 1:
        raise InvalidCovariance(f"rho_d needs residual_df >= 1, got {m}")
    half = 0.5 * m
    corr = np.array([hyp0f1(half, -half * vg / 2.0) for vg in v])
    return float(shares.w_hat @ (np.exp(effects.tau_hat) * corr) - 1.0)


def point_estimates(shares: ShareEstimates, effects: EffectEstimates) -> PointEstimates:
    tb = ate_log(shares, effects)
    return PointEstimates(
        tau_bar=tb,
        rho_a=rho_a(tb),
        rho_b=rho_b(shares, effects),
        rho_c=rho_c(shares, effects),
        rho_d=rho_d(shares, effects),
        rho_d_approximate=effects.cov_kind != "classical",
    )
