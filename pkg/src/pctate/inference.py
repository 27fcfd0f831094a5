"""Confidence intervals and z-tests for the percentage-point effect.

Three routes are provided: the log-point average itself, its exponential
transform, and a Fenton-Wilkinson log-normal approximation to the share-weighted
sum of exp(effects), which targets the percentage-point average directly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp, ndtri

from .errors import DegenerateInference, DimensionError, InvalidShare, NumericalWarning
from .estimators import EffectEstimates, ate_log
from .shares import ShareEstimates


@dataclass(frozen=True)
class InferenceInput:
    shares: ShareEstimates
    effects: EffectEstimates
    alpha: float = 0.05
    rho_0: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.rho_0 > -1.0:
            raise ValueError(f"rho_0 must exceed -1, got {self.rho_0}")


@dataclass(frozen=True)
class InferenceReport:
    mu_hat: float
    sigma_mu2_hat: float
    z_tau: float
    z_a: float
    z_mu: float
    ci_tau: tuple
    ci_a: tuple
    ci_rho: tuple
    se_tau_bar: float
    notes: tuple = field(default=())


def normal_quantile(p: float) -> float:
    return float(ndtri(p))


def se_tau_bar(shares: ShareEstimates, effects: EffectEstimates) -> float:
    """Delta-method SE of w'tau with independent share and effect estimators."""
    w, tau = shares.w_hat, effects.tau_hat
    if w.shape != tau.shape:
        raise DimensionError(f"{w.size} shares but {tau.size} effects")
    var = float(w @ effects.cov_tau @ w + tau @ shares.cov_w @ tau)
    if var < 0:
        warnings.warn(f"negative variance {var:.3g} for tau_bar clamped to 0", NumericalWarning, stacklevel=2)
        var = 0.0
    return math.sqrt(var)


def z_and_ci_logpoints(inp: InferenceInput, se: float):
    """z-scores and intervals for tau_bar and for exp(tau_bar) - 1.

    Returns ``(z_tau, ci_tau, z_a, ci_a)``.
    """
    if not se > 0:
        raise DegenerateInference("standard error of tau_bar is zero")
    tb = ate_log(inp.shares, inp.effects)
    q = normal_quantile(inp.alpha / 2.0)  # negative
    z_tau = (tb - inp.rho_0) / se
    z_a = (tb - math.log1p(inp.rho_0)) / se
    ci_tau = (tb + se * q, tb - se * q)
    ci_a = (math.expm1(ci_tau[0]), math.expm1(ci_tau[1]))
    return z_tau, ci_tau, z_a, ci_a


def eta_hat(shares: ShareEstimates, effects: EffectEstimates) -> np.ndarray:
    """Bias-corrected log of each subgroup's contribution w_g exp(tau_g).

    eta_g = ln w_g + tau_g - var(w_g) / (2 w_g^2) - var(tau_g) / 2, using only
    the diagonals of the two covariance matrices.
    """
    w, tau = shares.w_hat, effects.tau_hat
    if w.shape != tau.shape:
        raise DimensionError(f"{w.size} shares but {tau.size} effects")
    if np.any(w <= 0):
        raise InvalidShare("eta requires strictly positive shares")
    return np.log(w) + tau - 0.5 * np.diag(shares.cov_w) / w**2 - 0.5 * np.diag(effects.cov_tau)


def mu_hat(eta) -> float:
    """ln(sum exp(eta)), max-shifted."""
    return float(logsumexp(np.asarray(eta, dtype=np.float64)))


def sigma_eta(shares: ShareEstimates, effects: EffectEstimates) -> np.ndarray:
    """diag(w)^-1 cov_w diag(w)^-1 + cov_tau."""
    inv_w = 1.0 / shares.w_hat
    return inv_w[:, None] * shares.cov_w * inv_w[None, :] + effects.cov_tau


def sigma_mu2_hat(shares: ShareEstimates, effects: EffectEstimates, eta) -> float:
    """Fenton-Wilkinson variance of mu_hat.

    ln( e' E e / (1'e)^2 ) with e = exp(eta) and E the *element-wise*
    exponential of sigma_eta: the second moment of a multivariate log-normal,
    not a matrix exponential.
    """
    eta = np.asarray(eta, dtype=np.float64)
    if np.any(shares.w_hat <= 0):
        raise InvalidShare("sigma_mu2 requires strictly positive shares")
    S = sigma_eta(shares, effects)
    # ratio is invariant to a common rescaling of e
    e = np.exp(eta - eta.max())
    # ratio - 1 via expm1 keeps full precision for small variances
    excess = float(e @ np.expm1(S) @ e) / float(e.sum()) ** 2
    if excess < 0.0:
        if excess < -1e-15:
            warnings.warn(
                f"Fenton-Wilkinson moment ratio {1.0 + excess!r} below 1; variance clamped to 0",
                NumericalWarning,
                stacklevel=2,
            )
        return 0.0
    return math.log1p(excess)


def z_mu(mu: float, sigma2: float, rho_0: float = 0.0) -> float:
    """(mu + sigma2/2 - ln(1 + rho_0)) / sqrt(sigma2)."""
    if not sigma2 > 0:
        raise DegenerateInference("Fenton-Wilkinson variance is zero")
    if not rho_0 > -1.0:
        raise ValueError(f"rho_0 must exceed -1, got {rho_0}")
    return (mu + 0.5 * sigma2 - math.log1p(rho_0)) / math.sqrt(sigma2)


def ci_rho(mu: float, sigma2: float, alpha: float = 0.05) -> tuple:
    """Interval for the percentage-point average from the log-normal approximation."""
    if sigma2 < 0:
        raise ValueError("sigma2 must be nonnegative")
    s = math.sqrt(sigma2)
    q = normal_quantile(alpha / 2.0)
    center = mu + 0.5 * sigma2
    return (math.expm1(center + q * s), math.expm1(center - q * s))


def infer(inp: InferenceInput) -> InferenceReport:
    """Run every inference route for one set of shares and effects."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NumericalWarning)
        se = se_tau_bar(inp.shares, inp.effects)
        z_tau, ci_tau, z_a, ci_a = z_and_ci_logpoints(inp, se)
        eta = eta_hat(inp.shares, inp.effects)
        mu = mu_hat(eta)
        s2 = sigma_mu2_hat(inp.shares, inp.effects, eta)
        zm = z_mu(mu, s2, inp.rho_0)
        ci = ci_rho(mu, s2, inp.alpha)
    notes = tuple(str(w.message) for w in caught if issubclass(w.category, NumericalWarning))
    for w in caught:
        warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
    return InferenceReport(mu, s2, z_tau, z_a, zm, ci_tau, ci_a, ci, se, notes)
