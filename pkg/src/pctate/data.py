"""CSV ingestion for cross-sectional and panel inputs."""

from __future__ import annotations

import numpy as np
import pandas as pd

from .did import NEVER, PanelData
from .errors import NonPositiveOutcome, ParseError, SchemaError

NEVER_TOKENS = {"", "inf", "+inf", "infinity", "never", "na", "nan", "none", "."}


def read_csv(path, columns, outcome=None) -> pd.DataFrame:
    """Read a headed CSV and check that ``columns`` exist.

    When ``outcome`` is given it must be numeric and strictly positive; row
    numbers in errors count data rows from 1.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise ParseError(f"cannot parse {path}: {exc}") from exc
    except pd.errors.EmptyDataError as exc:
        raise SchemaError(f"{path} is empty") from exc
    frame.columns = [c.strip() for c in frame.columns]
    wanted = [c for c in columns if c is not None]
    missing = [c for c in wanted if c not in frame.columns]
    if missing:
        raise SchemaError(f"missing column(s) in {path}: {', '.join(missing)}")
    if outcome is not None:
        y = pd.to_numeric(frame[outcome].str.strip(), errors="coerce")
        bad = np.flatnonzero(y.isna().to_numpy())
        if bad.size:
            raise ParseError(
                f"outcome {outcome!r} not numeric at row(s) {', '.join(str(i + 1) for i in bad[:10])}"
            )
        nonpos = np.flatnonzero((y <= 0).to_numpy())
        if nonpos.size:
            raise NonPositiveOutcome((nonpos + 1).tolist())
        frame[outcome] = y.to_numpy(dtype=np.float64)
    return frame


def _numeric(frame, col):
    vals = pd.to_numeric(frame[col].astype(str).str.strip(), errors="coerce")
    bad = np.flatnonzero(vals.isna().to_numpy())
    if bad.size:
        raise ParseError(f"column {col!r} not numeric at row(s) {', '.join(str(i + 1) for i in bad[:10])}")
    return vals.to_numpy(dtype=np.float64)


def parse_cohort(values) -> np.ndarray:
    """Cohort strings to floats; blank / 'never' / 'inf' become NEVER."""
    out = np.empty(len(values))
    for i, v in enumerate(values):
        s = str(v).strip().lower()
        if s in NEVER_TOKENS:
            out[i] = NEVER
            continue
        try:
            f = float(s)
        except ValueError:
            raise ParseError(f"cohort value {v!r} at row {i + 1} is not a period or blank") from None
        if f != round(f):
            raise ParseError(f"cohort value {v!r} at row {i + 1} is not an integer period")
        out[i] = f
    return out


def read_records(path, outcome, group, covariates=(), cluster=None) -> pd.DataFrame:
    """Cross-sectional input: numeric covariates, string subgroup labels."""
    frame = read_csv(path, [outcome, group, *covariates, cluster], outcome=outcome)
    for c in covariates:
        frame[c] = _numeric(frame, c)
    frame[group] = frame[group].astype(str).str.strip()
    return frame


def read_panel(path, unit, time, cohort, outcome, covariates=()) -> PanelData:
    frame = read_csv(path, [unit, time, cohort, outcome, *covariates], outcome=outcome)
    t = _numeric(frame, time)
    if np.any(t != np.round(t)):
        raise ParseError(f"time column {time!r} must hold integer periods")
    cov = np.column_stack([_numeric(frame, c) for c in covariates]) if covariates else None
    return PanelData(
        unit=frame[unit].astype(str).str.strip().to_numpy(),
        time=t.astype(np.int64),
        cohort=parse_cohort(frame[cohort].tolist()),
        y=frame[outcome].to_numpy(dtype=np.float64),
        covariates=cov,
        covariate_names=tuple(covariates),
    )
