"""Staggered-adoption difference-in-differences with cohort x event-time cells.

Each (cohort, event time) pair gets its own treatment dummy in a two-way fixed
effects regression on ln(y); never-treated units are the controls and r = -1
is the omitted base period. Unit effects are absorbed by within-unit
demeaning, time effects enter as explicit dummies.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import pandas as pd

from . import kernels
from .errors import (
    DimensionError,
    EmptyAggregation,
    EmptyTreatment,
    NoControlGroup,
    NonPositiveOutcome,
    SchemaError,
)
from .estimators import EffectEstimates, PointEstimates, point_estimates
from .inference import InferenceInput, InferenceReport, infer
from .ols import DesignMatrix, cluster_vcov, fit_ols
from .shares import ShareEstimates, estimate_shares

NEVER = math.inf
DEFAULT_WINDOW = (-6, 3)


class CellKey(NamedTuple):
    cohort: int
    event_time: int

    def __str__(self):
        return f"c={self.cohort},r={self.event_time}"


@dataclass(frozen=True)
class PanelData:
    """Long-format panel; ``cohort`` is the first treated period or NEVER."""

    unit: np.ndarray
    time: np.ndarray
    cohort: np.ndarray
    y: np.ndarray
    covariates: np.ndarray = None
    covariate_names: tuple = ()

    def __post_init__(self):
        unit = np.asarray(self.unit)
        time = np.asarray(self.time).astype(np.int64)
        cohort = np.asarray(self.cohort, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        n = unit.shape[0]
        if not (time.shape[0] == cohort.shape[0] == y.shape[0] == n):
            raise DimensionError("panel columns have different lengths")
        cov = np.empty((n, 0)) if self.covariates is None else np.asarray(self.covariates, dtype=np.float64)
        if cov.ndim == 1:
            cov = cov[:, None]
        if cov.shape[0] != n or cov.shape[1] != len(self.covariate_names):
            raise DimensionError("covariates do not match covariate_names / row count")
        bad = np.flatnonzero(~(y > 0))
        if bad.size:
            raise NonPositiveOutcome((bad + 1).tolist())
        finite = np.isfinite(cohort)
        if np.any(cohort[finite] != np.round(cohort[finite])):
            raise SchemaError("cohort must be an integer period or NEVER")
        key = pd.DataFrame({"u": unit, "t": time})
        if key.duplicated().any():
            raise SchemaError("(unit, time) pairs must be unique")
        per_unit = pd.DataFrame({"u": unit, "c": np.where(finite, cohort, np.nan)}).groupby("u")["c"]
        if (per_unit.nunique(dropna=False) > 1).any():
            raise SchemaError("cohort must be constant within a unit")
        if not np.any(~finite):
            raise NoControlGroup("panel has no never-treated units")
        for name, val in (("unit", unit), ("time", time), ("cohort", cohort), ("y", y), ("covariates", cov)):
            object.__setattr__(self, name, val)

    @property
    def n_obs(self):
        return self.y.shape[0]

    def subset(self, mask):
        mask = np.asarray(mask, dtype=bool)
        return PanelData(
            self.unit[mask], self.time[mask], self.cohort[mask], self.y[mask],
            self.covariates[mask], self.covariate_names,
        )


@dataclass(frozen=True)
class PanelDesign:
    """Demeaned regression inputs plus the bookkeeping to map columns to cells."""

    design: DesignMatrix
    outcome: np.ndarray
    cells: tuple
    cell_counts: np.ndarray
    unit_ids: np.ndarray
    n_units: int
    residual_df: int
    window: tuple
    notes: tuple = field(default=())

    def cell_index(self, cell):
        return self.cells.index(cell)


def build_panel_design(panel: PanelData, window=DEFAULT_WINDOW) -> PanelDesign:
    """Within-unit demeaned design for the interacted two-way FE model.

    Treated observations with event time outside ``window`` are dropped,
    except r = -1 which is always kept as the base period. Cohorts without a
    post-treatment observation inside the window are dropped entirely.
    """
    r_min, r_max = int(window[0]), int(window[1])
    if not r_min <= 0 <= r_max:
        raise ValueError(f"event-time window {window} must include 0")
    notes = []

    treated = np.isfinite(panel.cohort)
    r = np.where(treated, panel.time - np.where(treated, panel.cohort, 0), 0).astype(np.int64)

    post_in_window = treated & (r >= 0) & (r <= r_max)
    cohorts = np.unique(panel.cohort[treated])
    has_post = set(np.unique(panel.cohort[post_in_window]).tolist())
    dead = [c for c in cohorts.tolist() if c not in has_post]
    keep = np.ones(panel.n_obs, dtype=bool)
    for c in dead:
        msg = f"cohort {int(c)} has no post-treatment observation in window; dropped"
        warnings.warn(msg, UserWarning, stacklevel=2)
        notes.append(msg)
        keep &= panel.cohort != c
    outside = treated & (r != -1) & ((r < r_min) | (r > r_max))
    if np.any(outside & keep):
        notes.append(f"{int(np.sum(outside & keep))} treated observations outside window {window} dropped")
    keep &= ~outside

    if not np.any(keep & treated):
        raise EmptyTreatment("no treated observations remain")
    sub = panel.subset(keep)
    treated = np.isfinite(sub.cohort)
    r = r[keep]

    cell_frame = pd.DataFrame({"c": sub.cohort[treated].astype(np.int64), "r": r[treated]})
    cell_frame = cell_frame[cell_frame["r"] != -1]
    if cell_frame.empty:
        raise EmptyTreatment("no treated cells besides the base period")
    counts = cell_frame.value_counts().sort_index()
    cells = tuple(CellKey(int(c), int(rr)) for c, rr in counts.index)

    n = sub.n_obs
    cols, labels = [], []
    for j, name in enumerate(sub.covariate_names):
        cols.append(sub.covariates[:, j])
        labels.append(str(name))
    times = np.unique(sub.time)
    for t in times[1:]:
        cols.append((sub.time == t).astype(np.float64))
        labels.append(f"time[{t}]")
    c_int = np.where(treated, sub.cohort, -1).astype(np.int64)
    for cell in cells:
        cols.append((treated & (c_int == cell.cohort) & (r == cell.event_time)).astype(np.float64))
        labels.append(f"cell[{cell}]")
    raw = np.column_stack(cols)

    codes, uniq = pd.factorize(sub.unit)
    n_units = len(uniq)
    Xd = kernels.demean(raw, codes, n_units)
    yd = kernels.demean(np.log(sub.y), codes, n_units)

    # demeaned dummies are no longer 0/1, so the design carries no treatment columns
    design = DesignMatrix(Xd, tuple(labels), ())
    k = Xd.shape[1]
    m = n - n_units - k
    return PanelDesign(
        design=design,
        outcome=yd,
        cells=cells,
        cell_counts=counts.to_numpy().astype(np.int64),
        unit_ids=np.asarray(sub.unit),
        n_units=n_units,
        residual_df=m,
        window=(r_min, r_max),
        notes=tuple(notes),
    )


def fit_stagdid(pdesign: PanelDesign) -> EffectEstimates:
    """OLS on the demeaned design with CR1 covariance clustered by unit."""
    k = pdesign.design.shape[1]
    fit = fit_ols(pdesign.design, pdesign.outcome, residual_df=pdesign.residual_df)
    cov = cluster_vcov(fit, pdesign.design, pdesign.unit_ids, n_params=k)
    g = len(pdesign.cells)
    idx = list(range(k - g, k))
    return EffectEstimates(
        tau_hat=fit.coefficients[idx],
        cov_tau=cov.submatrix(idx),
        residual_df=pdesign.residual_df,
        cov_kind=cov.kind,
        labels=pdesign.cells,
    )


@dataclass(frozen=True)
class AggregationSet:
    """A target set of cells: one event time, one cohort, one calendar period, or all."""

    kind: str
    value: int | None = None

    PANELS = {
        "overall": "All Treated Units",
        "cohort": "Cohort",
        "event_time": "Event Time",
        "calendar": "Calendar Year",
    }

    def __post_init__(self):
        if self.kind not in self.PANELS:
            raise ValueError(f"unknown aggregation kind {self.kind!r}")
        if (self.kind == "overall") != (self.value is None):
            raise ValueError(f"aggregation {self.kind!r} has wrong value {self.value!r}")

    @classmethod
    def overall(cls):
        return cls("overall")

    @classmethod
    def event_time(cls, r):
        return cls("event_time", int(r))

    @classmethod
    def cohort(cls, c):
        return cls("cohort", int(c))

    @classmethod
    def calendar(cls, t):
        return cls("calendar", int(t))

    @property
    def panel(self):
        return self.PANELS[self.kind]

    @property
    def label(self):
        return "ATT" if self.kind == "overall" else str(self.value)

    def contains(self, cell: CellKey) -> bool:
        c, r = cell
        if self.kind == "event_time":
            return r == self.value
        if r < 0:
            return False
        if self.kind == "cohort":
            return c == self.value
        if self.kind == "calendar":
            return c + r == self.value
        return True

    def members(self, cells) -> list:
        idx = [i for i, cell in enumerate(cells) if self.contains(cell)]
        if not idx:
            raise EmptyAggregation(f"no estimated cells in aggregation {self.kind}={self.value}")
        return idx


def default_sets(cells) -> list:
    """Overall, per-cohort, per-event-time and per-calendar-period sets."""
    post = [c for c in cells if c.event_time >= 0]
    sets = [AggregationSet.overall()]
    sets += [AggregationSet.cohort(c) for c in sorted({c.cohort for c in post})]
    sets += [AggregationSet.event_time(r) for r in sorted({c.event_time for c in cells})]
    sets += [AggregationSet.calendar(t) for t in sorted({c.cohort + c.event_time for c in post})]
    return sets


def aggregation_weights(pdesign: PanelDesign, aset: AggregationSet) -> ShareEstimates:
    """Observation-count shares of the member cells, in cell order."""
    idx = aset.members(pdesign.cells)
    return estimate_shares(pdesign.cell_counts[idx])


@dataclass(frozen=True)
class ReportRow:
    panel: str
    label: str
    cells: tuple
    n_obs: int
    point: PointEstimates
    inference: InferenceReport

    @property
    def homogeneous(self):
        return len(self.cells) == 1


def att_report(effects: EffectEstimates, pdesign: PanelDesign, sets=None, alpha=0.05, rho_0=0.0) -> list:
    """Percentage-point ATT estimates and intervals for each aggregation set."""
    if sets is None:
        sets = default_sets(pdesign.cells)
    rows = []
    for aset in sets:
        idx = aset.members(pdesign.cells)
        shares = estimate_shares(pdesign.cell_counts[idx])
        eff = effects.subset(idx)
        pe = point_estimates(shares, eff)
        inf = infer(InferenceInput(shares, eff, alpha, rho_0))
        rows.append(
            ReportRow(aset.panel, aset.label, tuple(pdesign.cells[i] for i in idx), shares.n_treated, pe, inf)
        )
    return rows


def estimate_did(panel: PanelData, window=DEFAULT_WINDOW, sets=None, alpha=0.05, rho_0=0.0):
    """Build, fit and aggregate in one call. Returns ``(pdesign, effects, rows)``."""
    pdesign = build_panel_design(panel, window)
    effects = fit_stagdid(pdesign)
    return pdesign, effects, att_report(effects, pdesign, sets, alpha, rho_0)
