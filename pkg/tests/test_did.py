import math
import warnings

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import make_panel
from pctate.did import (
    NEVER,
    AggregationSet,
    CellKey,
    PanelData,
    aggregation_weights,
    build_panel_design,
    default_sets,
    estimate_did,
    fit_stagdid,
)
from pctate.errors import (
    EmptyAggregation,
    EmptyTreatment,
    NoControlGroup,
    NonPositiveOutcome,
    SchemaError,
)
from pctate.ols import DesignMatrix, cluster_vcov, fit_ols


def test_cells_and_layout():
    panel = make_panel(0, n_units=40, periods=6, cohorts=(3, 5))
    pd_ = build_panel_design(panel, window=(-6, 5))
    assert CellKey(3, -1) not in pd_.cells
    assert CellKey(3, 0) in pd_.cells and CellKey(5, -4) in pd_.cells
    assert pd_.cells == tuple(sorted(pd_.cells))
    assert pd_.design.column_labels[-1] == f"cell[{pd_.cells[-1]}]"
    assert pd_.n_units == 40
    assert pd_.residual_df == panel.n_obs - 40 - pd_.design.shape[1]
    per_cohort = {3: 14, 5: 13}
    assert all(n == per_cohort[c.cohort] for c, n in zip(pd_.cells, pd_.cell_counts))
    assert str(CellKey(3, 0)) == "c=3,r=0"


def test_window_trims_cells_and_keeps_base_period():
    panel = make_panel(1, n_units=40, periods=8, cohorts=(3, 5))
    pd_ = build_panel_design(panel, window=(-2, 1))
    assert {c.event_time for c in pd_.cells} <= {-2, 0, 1}
    assert any("outside window" in n for n in pd_.notes)


def test_cohort_without_post_period_dropped():
    panel = make_panel(2, n_units=30, periods=5, cohorts=(3, 9))
    with pytest.warns(UserWarning, match="cohort 9"):
        pd_ = build_panel_design(panel, window=(-6, 3))
    assert {c.cohort for c in pd_.cells} == {3}


def test_demeaning_matches_unit_dummies():
    panel = make_panel(3, n_units=20, periods=6, cohorts=(3, 4))
    pd_ = build_panel_design(panel, window=(-6, 5))
    fit = fit_ols(pd_.design, pd_.outcome, residual_df=pd_.residual_df)

    units = np.unique(panel.unit)
    dummies = (panel.unit[:, None] == units[None, :]).astype(float)
    times = np.unique(panel.time)
    tdum = (panel.time[:, None] == times[None, 1:]).astype(float)
    r = panel.time - np.where(np.isfinite(panel.cohort), panel.cohort, 0)
    cells = [
        ((panel.cohort == c.cohort) & (r == c.event_time)).astype(float) for c in pd_.cells
    ]
    X = np.column_stack([dummies, tdum] + cells)
    labels = tuple(f"u{u}" for u in units) + tuple(f"t{t}" for t in times[1:]) + tuple(map(str, pd_.cells))
    full = DesignMatrix(X, labels)
    ref = fit_ols(full, np.log(panel.y))
    k = pd_.design.shape[1]
    assert_allclose(fit.coefficients, ref.coefficients[-k:], atol=1e-9)
    assert ref.residual_df == pd_.residual_df
    assert_allclose(fit.residuals, ref.residuals, atol=1e-9)
    ours = cluster_vcov(fit, pd_.design, pd_.unit_ids, n_params=k).values
    theirs = cluster_vcov(ref, full, panel.unit, n_params=k).values[-k:, -k:]
    assert_allclose(ours, theirs, rtol=1e-7, atol=1e-14)


def test_fit_returns_cell_effects():
    panel = make_panel(4, n_units=60, periods=8, sigma=0.02)
    pd_ = build_panel_design(panel, window=(-6, 5))
    eff = fit_stagdid(pd_)
    assert eff.cov_kind == "CR1"
    assert eff.labels == pd_.cells
    assert eff.tau_hat.shape == (len(pd_.cells),)
    assert np.all(eff.variances > 0)


def test_aggregation_sets():
    cells = (CellKey(3, -2), CellKey(3, 0), CellKey(3, 1), CellKey(5, 0))
    assert AggregationSet.event_time(-2).members(cells) == [0]
    assert AggregationSet.cohort(3).members(cells) == [1, 2]
    assert AggregationSet.calendar(4).members(cells) == [2]
    assert AggregationSet.calendar(5).members(cells) == [3]
    assert AggregationSet.overall().members(cells) == [1, 2, 3]
    with pytest.raises(EmptyAggregation):
        AggregationSet.cohort(9).members(cells)
    with pytest.raises(ValueError):
        AggregationSet("bogus", 1)


def test_calendar_sets_partition_post_cells():
    panel = make_panel(5, n_units=40)
    pd_ = build_panel_design(panel, window=(-6, 5))
    sets = default_sets(pd_.cells)
    overall = set(AggregationSet.overall().members(pd_.cells))
    cal = [set(s.members(pd_.cells)) for s in sets if s.kind == "calendar"]
    assert set().union(*cal) == overall
    assert sum(len(c) for c in cal) == len(overall)
    coh = [set(s.members(pd_.cells)) for s in sets if s.kind == "cohort"]
    assert set().union(*coh) == overall


def test_weights_from_counts():
    panel = make_panel(6, n_units=40)
    pd_ = build_panel_design(panel, window=(-6, 5))
    idx = AggregationSet.calendar(5).members(pd_.cells)
    assert len(idx) == 2
    pd_.cell_counts[idx] = [100, 300]
    w = aggregation_weights(pd_, AggregationSet.calendar(5))
    assert_allclose(w.w_hat, [0.25, 0.75])
    w = aggregation_weights(pd_, AggregationSet.overall())
    assert w.w_hat.sum() == pytest.approx(1.0, abs=1e-15)


def test_single_cohort_rows_match():
    panel = make_panel(7, n_units=30, cohorts=(4,))
    _, _, rows = estimate_did(panel, window=(-6, 4))
    overall = rows[0]
    cohort = [r for r in rows if r.panel == "Cohort"]
    assert len(cohort) == 1
    assert cohort[0].cells == overall.cells
    assert cohort[0].point == overall.point
    assert [r.panel for r in rows][:2] == ["All Treated Units", "Cohort"]


def test_null_effect_coverage():
    covered = 0
    reps = 200
    for seed in range(reps):
        panel = make_panel(1000 + seed, n_units=60, periods=6, cohorts=(3, 5), tau=lambda c, r: 0.0)
        _, _, rows = estimate_did(panel, window=(-6, 3), sets=[AggregationSet.overall()])
        lo, hi = rows[0].inference.ci_rho
        covered += lo <= 0.0 <= hi
    # CR1 with 60 clusters; generous band around 95%
    assert 0.88 <= covered / reps <= 0.995


def test_panel_validation():
    unit = np.repeat([0, 1, 2], 3)
    time = np.tile([1, 2, 3], 3)
    y = np.ones(9)
    with pytest.raises(NoControlGroup):
        PanelData(unit, time, np.repeat([2.0, 2.0, 3.0], 3), y)
    with pytest.raises(NonPositiveOutcome) as info:
        PanelData(unit, time, np.repeat([2.0, NEVER, 3.0], 3), np.r_[1, 1, 0, np.ones(6)])
    assert info.value.rows == [3]
    with pytest.raises(SchemaError):
        PanelData(unit, time, np.r_[2, 2, 3, NEVER, NEVER, NEVER, 3, 3, 3], y)
    with pytest.raises(SchemaError):
        PanelData(np.zeros(9), time, np.full(9, NEVER), y)


def test_no_treated_cells():
    unit = np.repeat([0, 1], 3)
    time = np.tile([1, 2, 3], 2)
    panel = PanelData(unit, time, np.r_[[9.0] * 3, [NEVER] * 3], np.ones(6))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(EmptyTreatment):
            build_panel_design(panel, window=(-1, 1))


def test_calendar_combination_equals_overall():
    panel = make_panel(12, n_units=80)
    pdesign, effects, rows = estimate_did(panel, window=(-6, 5))
    overall = rows[0]
    cal = [r for r in rows if r.panel == "Calendar Year"]
    total = sum(r.n_obs for r in cal)
    combined = sum(r.n_obs * r.point.tau_bar for r in cal) / total
    assert total == overall.n_obs
    assert abs(combined - overall.point.tau_bar) <= 1e-10


def test_symmetric_effects_give_jensen_gap():
    # equal-sized cells with effects -0.2 / +0.2 average to 0 in log points
    tau = {(3, 0): -0.2, (3, 1): 0.2, (5, 0): 0.2, (5, 1): -0.2}
    panel = make_panel(13, n_units=90, periods=6, cohorts=(3, 5), sigma=0.005,
                       tau=lambda c, r: tau.get((c, r), 0.0))
    _, _, rows = estimate_did(panel, window=(-6, 1), sets=[AggregationSet.overall()])
    pe = rows[0].point
    assert pe.tau_bar == pytest.approx(0.0, abs=2e-3)
    assert pe.rho_c == pytest.approx(math.cosh(0.2) - 1, abs=2e-3)
