import os
import subprocess
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

from pctate import _pykernels as py
from pctate import kernels
from pctate.errors import ConvergenceError

try:
    from pctate import _ckernels as cy
except ImportError:  # pragma: no cover - extension not built
    cy = None

needs_ext = pytest.mark.skipif(cy is None, reason="compiled extension not built")


@pytest.fixture
def data():
    rng = np.random.default_rng(0)
    n, k, c = 500, 6, 37
    return rng.normal(size=(n, k)), rng.normal(size=n), rng.normal(size=n), rng.integers(0, c, n), c


@needs_ext
@pytest.mark.parametrize("a,b", [(0.5, 0.25), (9.0, -0.09), (5e5, -2.5e4), (3.0, 0.0), (1.5, 40.0)])
def test_hyp0f1_backends_agree(a, b):
    assert cy.hyp0f1(a, b) == pytest.approx(py.hyp0f1(a, b), rel=1e-14)


@needs_ext
def test_meats_agree(data):
    X, e, f, codes, c = data
    assert_allclose(cy.hc0_meat(X, e), py.hc0_meat(X, e), rtol=1e-12)
    assert_allclose(cy.hc0_meat(X, e, f), py.hc0_meat(X, e, f), rtol=1e-12, atol=1e-12)
    assert_allclose(cy.cluster_scores(X, e, codes, c), py.cluster_scores(X, e, codes, c), rtol=1e-12, atol=1e-13)
    assert_allclose(cy.cluster_meat(X, e, codes, c), py.cluster_meat(X, e, codes, c), rtol=1e-12, atol=1e-12)


@needs_ext
def test_demean_agrees(data):
    X, e, _, codes, c = data
    assert_allclose(cy.demean(X, codes, c), py.demean(X, codes, c), atol=1e-13)
    assert_allclose(cy.demean(e, codes, c), py.demean(e, codes, c), atol=1e-13)


@pytest.mark.parametrize("impl", [py] + ([cy] if cy is not None else []))
def test_demean_zeroes_group_means(impl, data):
    X, _, _, codes, c = data
    D = impl.demean(X, codes, c)
    for g in range(c):
        assert_allclose(D[codes == g].mean(axis=0), 0.0, atol=1e-13)


@pytest.mark.parametrize("impl", [py] + ([cy] if cy is not None else []))
def test_hyp0f1_guards(impl):
    with pytest.raises(ValueError):
        impl.hyp0f1(0.0, 1.0)
    with pytest.raises(ConvergenceError):
        impl.hyp0f1(0.5, 1.0, max_terms=3)


def test_env_var_forces_fallback():
    env = dict(os.environ, PCTATE_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from pctate import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
    assert kernels.BACKEND in ("cython", "python")
