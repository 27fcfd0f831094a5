"""End-to-end cross-sectional estimation from records to a report row."""

from __future__ import annotations

import numpy as np
import pandas as pd

from .errors import NonPositiveOutcome, ParseError
from .estimators import EffectEstimates, point_estimates
from .inference import InferenceInput, infer
from .ols import build_design, classical_vcov, cluster_vcov, fit_ols, hc0_vcov
from .report import EstimateRow
from .shares import estimate_shares

VCOV_KINDS = ("HC0", "classical")


def estimate_cross_section(
    rows,
    outcome,
    group,
    covariates=(),
    control="control",
    groups=None,
    cluster=None,
    vcov="HC0",
    alpha=0.05,
    rho_0=0.0,
):
    """Regress ln(outcome) on covariates and subgroup dummies, then aggregate.

    ``cluster`` selects CR1 by that column and overrides ``vcov``. Returns
    ``(EstimateRow, EffectEstimates, ShareEstimates)``.
    """
    if vcov not in VCOV_KINDS:
        raise ValueError(f"vcov must be one of {VCOV_KINDS}, got {vcov!r}")
    frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(rows)
    design = build_design(frame, list(covariates), group, control, groups)
    if outcome not in frame.columns:
        raise ParseError(f"missing column: {outcome}")
    y = pd.to_numeric(frame[outcome], errors="coerce").to_numpy(dtype=np.float64)
    bad = np.flatnonzero(~(y > 0))
    if bad.size:
        raise NonPositiveOutcome((bad + 1).tolist())
    fit = fit_ols(design, np.log(y))
    if cluster is not None:
        cov = cluster_vcov(fit, design, frame[cluster].to_numpy())
    elif vcov == "classical":
        cov = classical_vcov(fit)
    else:
        cov = hc0_vcov(fit, design)
    idx = list(design.treatment_columns)
    labels = tuple(design.column_labels[i][2:-1] for i in idx)
    effects = EffectEstimates(fit.coefficients[idx], cov.submatrix(idx), fit.residual_df, cov.kind, labels)
    shares = estimate_shares(design.group_counts)
    pe = point_estimates(shares, effects)
    inf = infer(InferenceInput(shares, effects, alpha, rho_0))
    row = EstimateRow("All Treated Units", "ATE", len(idx), shares.n_treated, pe, inf)
    return row, effects, shares
