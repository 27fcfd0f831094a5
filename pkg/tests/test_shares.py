import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from pctate.errors import EmptyInput, InvalidShare, MissingGroup
from pctate.ols import DesignMatrix, fit_ols, hc0_cross_vcov
from pctate.shares import estimate_shares, fixed_shares


def test_small_counts():
    s = estimate_shares([2, 3, 5])
    assert_allclose(s.w_hat, [0.2, 0.3, 0.5])
    assert_allclose(s.cov_w[0, 0], 0.016)
    assert s.n_treated == 10


def test_single_group():
    s = estimate_shares([42])
    assert_allclose(s.w_hat, [1.0])
    assert_allclose(s.cov_w, [[0.0]], atol=1e-18)


def test_uniform_counts():
    s = estimate_shares([10, 10, 10, 10])
    assert_allclose(s.w_hat, 0.25)
    assert_allclose(s.cov_w[0, 1], -0.25**2 / 40)
    assert_allclose(s.cov_w[2, 2], 0.25 * 0.75 / 40)


def test_errors():
    with pytest.raises(MissingGroup):
        estimate_shares([3, 0, 2])
    with pytest.raises(EmptyInput):
        estimate_shares([])
    with pytest.raises(InvalidShare):
        fixed_shares([0.5, -0.5])


def test_fixed_shares():
    s = fixed_shares([0.5, 0.5])
    assert_allclose(s.cov_w, 0.0)
    assert not s.renormalized
    with pytest.warns(UserWarning):
        s = fixed_shares([2, 2])
    assert_allclose(s.w_hat, [0.5, 0.5])
    assert s.renormalized


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(1, 10_000), min_size=1, max_size=8))
def test_share_invariants(counts):
    s = estimate_shares(counts)
    assert np.all(s.w_hat > 0)
    assert abs(s.w_hat.sum() - 1) < 1e-12
    assert_allclose(s.cov_w, s.cov_w.T)
    assert_allclose(s.cov_w.sum(axis=1), 0.0, atol=1e-12)
    assert np.min(np.linalg.eigvalsh(s.cov_w)) > -1e-15
    perm = np.random.default_rng(len(counts)).permutation(len(counts))
    sp = estimate_shares(np.asarray(counts)[perm])
    assert_allclose(sp.w_hat, s.w_hat[perm])
    assert_allclose(sp.cov_w, s.cov_w[np.ix_(perm, perm)])


def auxiliary_share_vcov(counts):
    """Regress each subgroup dummy on the treated indicator over the treated rows."""
    labels = np.repeat(np.arange(len(counts)), counts)
    s = np.ones((labels.size, 1))
    design = DesignMatrix(s, ("s",))
    fits = [fit_ols(design, (labels == g).astype(float)) for g in range(len(counts))]
    coef = np.array([f.coefficients[0] for f in fits])
    G = len(counts)
    V = np.empty((G, G))
    for a in range(G):
        for b in range(G):
            V[a, b] = hc0_cross_vcov(fits[a], fits[b], design)[0, 0]
    return coef, V


def test_auxiliary_regression_identity():
    rng = np.random.default_rng(11)
    for _ in range(10):
        counts = rng.integers(1, 60, rng.integers(1, 6))
        coef, V = auxiliary_share_vcov(counts)
        s = estimate_shares(counts)
        assert_allclose(coef, s.w_hat, atol=1e-12)
        assert_allclose(V, s.cov_w, atol=1e-12)
