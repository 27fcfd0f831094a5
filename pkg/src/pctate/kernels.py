"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy fallback.
Set ``PCTATE_PURE_PYTHON=1`` to force the fallback.
"""

import os

if os.environ.get("PCTATE_PURE_PYTHON", "") not in ("", "0"):
    from . import _pykernels as _impl
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # pragma: no cover - depends on the build
        from . import _pykernels as _impl

BACKEND = _impl.BACKEND
hyp0f1 = _impl.hyp0f1
hc0_meat = _impl.hc0_meat
cluster_scores = _impl.cluster_scores
cluster_meat = _impl.cluster_meat
demean = _impl.demean

__all__ = ["BACKEND", "hyp0f1", "hc0_meat", "cluster_scores", "cluster_meat", "demean"]
