"""Design matrices, OLS fits and sandwich covariance estimators.

All covariance matrices returned here describe the coefficient estimator
itself (finite-sample scale), never the sqrt(N)-scaled asymptotic variance.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import linalg as sla

from . import kernels
from .errors import (
    DegenerateClusters,
    DimensionError,
    MissingGroup,
    ParseError,
    SingularDesign,
)

RANK_RTOL = 1e-10


@dataclass(frozen=True)
class DesignMatrix:
    """Regressor matrix ``[X, D]`` with the positions of the treatment dummies.

    Parameters
    ----------
    values : ndarray, shape (N, K)
    column_labels : tuple of str
    treatment_columns : tuple of int
        Indices of the G mutually exclusive subgroup dummies.
    """

    values: np.ndarray
    column_labels: tuple
    treatment_columns: tuple = ()

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DimensionError("design matrix must be two-dimensional")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "column_labels", tuple(str(c) for c in self.column_labels))
        object.__setattr__(self, "treatment_columns", tuple(int(j) for j in self.treatment_columns))
        n, k = values.shape
        if len(self.column_labels) != k:
            raise DimensionError(f"{len(self.column_labels)} labels for {k} columns")
        if n < k:
            raise DimensionError(f"design has fewer rows ({n}) than columns ({k})")
        if self.treatment_columns:
            D = values[:, list(self.treatment_columns)]
            if not np.all((D == 0.0) | (D == 1.0)):
                raise ParseError("treatment columns must be binary 0/1")
            if np.any(D.sum(axis=1) > 1.0):
                raise ParseError("treatment columns must be mutually exclusive row-wise")

    @property
    def shape(self):
        return self.values.shape

    @property
    def n_groups(self):
        return len(self.treatment_columns)

    @property
    def group_counts(self):
        """Number of rows in each treatment subgroup."""
        D = self.values[:, list(self.treatment_columns)]
        return D.sum(axis=0).astype(np.int64)


@dataclass(frozen=True)
class OlsFit:
    coefficients: np.ndarray
    residuals: np.ndarray
    xtx_inverse: np.ndarray
    residual_df: int
    sigma2_hat: float
    column_labels: tuple = field(default=(), compare=False)


@dataclass(frozen=True)
class CovMatrix:
    values: np.ndarray
    kind: str

    @property
    def se(self):
        return np.sqrt(np.clip(np.diag(self.values), 0.0, None))

    def submatrix(self, idx):
        idx = list(idx)
        return self.values[np.ix_(idx, idx)]


def _as_frame(rows) -> pd.DataFrame:
    if isinstance(rows, pd.DataFrame):
        return rows
    if isinstance(rows, Mapping):
        return pd.DataFrame(dict(rows))
    return pd.DataFrame(list(rows))


def build_design(
    rows,
    covariates: Sequence[str],
    group: str,
    control="control",
    groups: Sequence | None = None,
    intercept: bool = True,
) -> DesignMatrix:
    """Assemble ``[1, covariates, D]`` from tabular records.

    Parameters
    ----------
    rows : DataFrame, mapping of columns, or iterable of record dicts
    covariates : list of str
        Numeric covariate columns.
    group : str
        Column holding subgroup labels; ``control`` marks untreated rows.
    groups : sequence, optional
        Declared treatment labels, in column order. Defaults to the distinct
        non-control labels, sorted.
    intercept : bool
        Prepend a column of ones.
    """
    frame = _as_frame(rows)
    missing_cols = [c for c in [*covariates, group] if c not in frame.columns]
    if missing_cols:
        raise ParseError(f"missing column(s): {', '.join(missing_cols)}")

    labels = frame[group]
    # compare as strings so "1" and 1 name the same group
    str_labels = labels.astype(str)
    control_s = str(control)
    if groups is None:
        groups = sorted(set(str_labels[str_labels != control_s]))
    else:
        groups = list(dict.fromkeys(str(g) for g in groups))
    unknown = sorted(set(str_labels) - set(groups) - {control_s})
    if unknown:
        raise ParseError(f"undeclared subgroup label(s) in column {group!r}: {', '.join(unknown)}")
    if not groups:
        raise MissingGroup([], "no treated subgroup present in the data")

    n = len(frame)
    cols, names = [], []
    if intercept:
        cols.append(np.ones(n))
        names.append("const")
    for c in covariates:
        num = pd.to_numeric(frame[c], errors="coerce")
        bad = np.flatnonzero(num.isna().to_numpy())
        if bad.size:
            raise ParseError(
                f"covariate {c!r} is not numeric at row(s) {', '.join(str(i + 1) for i in bad[:10])}"
            )
        cols.append(num.to_numpy(dtype=np.float64))
        names.append(str(c))

    first_treat = len(cols)
    empty = []
    for g in groups:
        d = (str_labels == g).to_numpy(dtype=np.float64)
        if d.sum() == 0:
            empty.append(g)
        cols.append(d)
        names.append(f"d[{g}]")
    if empty:
        raise MissingGroup(empty)
    values = np.column_stack(cols) if cols else np.empty((n, 0))
    return DesignMatrix(values, tuple(names), tuple(range(first_treat, first_treat + len(groups))))


def fit_ols(design: DesignMatrix, outcome, residual_df: int | None = None) -> OlsFit:
    """Least squares via column-pivoted QR.

    ``residual_df`` overrides ``N - K`` when parameters were absorbed before
    the fit (e.g. unit fixed effects removed by demeaning).
    """
    X = design.values
    y = np.asarray(outcome, dtype=np.float64).ravel()
    n, k = X.shape
    if y.shape[0] != n:
        raise DimensionError(f"outcome has {y.shape[0]} rows, design has {n}")

    Q, R, piv = sla.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    scale = diag[0] if k else 0.0
    rank = int(np.sum(diag > RANK_RTOL * scale)) if scale > 0 else 0
    if rank < k:
        bad = [design.column_labels[j] for j in piv[rank:]]
        raise SingularDesign(bad)

    beta_p = sla.solve_triangular(R, Q.T @ y)
    coef = np.empty(k)
    coef[piv] = beta_p
    r_inv = sla.solve_triangular(R, np.eye(k))
    xtx_inv = np.empty((k, k))
    xtx_inv[np.ix_(piv, piv)] = r_inv @ r_inv.T

    resid = y - X @ coef
    m = n - k if residual_df is None else int(residual_df)
    sigma2 = float(resid @ resid / m) if m > 0 else float("nan")
    return OlsFit(coef, resid, xtx_inv, m, sigma2, design.column_labels)


def hc0_cross_vcov(fit_a: OlsFit, fit_b: OlsFit, design: DesignMatrix) -> np.ndarray:
    """HC0 cross-covariance between the coefficient vectors of two fits on one design."""
    B = fit_a.xtx_inverse
    meat = kernels.hc0_meat(design.values, fit_a.residuals, fit_b.residuals)
    return B @ meat @ B


def hc0_vcov(fit: OlsFit, design: DesignMatrix) -> CovMatrix:
    """White (HC0) sandwich: (X'X)^-1 (sum x_i x_i' e_i^2) (X'X)^-1."""
    B = fit.xtx_inverse
    meat = kernels.hc0_meat(design.values, fit.residuals)
    V = B @ meat @ B
    return CovMatrix(0.5 * (V + V.T), "HC0")


def classical_vcov(fit: OlsFit) -> CovMatrix:
    """Homoscedastic covariance sigma2_hat * (X'X)^-1."""
    return CovMatrix(fit.sigma2_hat * fit.xtx_inverse, "classical")


def cluster_vcov(fit: OlsFit, design: DesignMatrix, cluster_ids, n_params: int | None = None) -> CovMatrix:
    """CR1 cluster-robust sandwich.

    The small-sample factor is ``C/(C-1) * (N-1)/(N-K)``; ``n_params``
    replaces K when some parameters were absorbed and should not count.
    """
    X = design.values
    n, k = X.shape
    ids = np.asarray(cluster_ids)
    if ids.shape[0] != n:
        raise DimensionError(f"{ids.shape[0]} cluster ids for {n} rows")
    codes, uniques = pd.factorize(ids, sort=True)
    n_clusters = len(uniques)
    if n_clusters < 2:
        raise DegenerateClusters("cluster-robust covariance needs at least 2 clusters")
    kk = k if n_params is None else int(n_params)
    c = n_clusters / (n_clusters - 1) * (n - 1) / (n - kk)
    B = fit.xtx_inverse
    meat = kernels.cluster_meat(X, fit.residuals, codes, n_clusters)
    V = c * (B @ meat @ B)
    return CovMatrix(0.5 * (V + V.T), "CR1")
