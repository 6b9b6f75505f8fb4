"""Backend selection for the hot kernels.

The compiled numba kernels are the default.  Setting the environment
variable ``CLIPNET_BACKEND=numpy`` before import forces the pure-numpy
fallback; ``CLIPNET_BACKEND=numba`` insists on the compiled path and fails
loudly if numba is unavailable.  ``benchmarks/bench_kernels.py`` times the
two implementations side by side.
"""
from __future__ import annotations

import os

from . import _kernels_np

_requested = os.environ.get("CLIPNET_BACKEND", "auto").strip().lower()
if _requested not in ("auto", "numpy", "numba"):
    raise RuntimeError(
        f"CLIPNET_BACKEND must be 'numpy' or 'numba', got {_requested!r}"
    )

if _requested == "numpy":
    _impl = _kernels_np
    BACKEND = "numpy"
else:
    try:
        from . import _kernels_nb as _impl
        BACKEND = "numba"
    except ImportError:
        if _requested == "numba":
            raise
        _impl = _kernels_np
        BACKEND = "numpy"

forward_batch = _impl.forward_batch
risk_value = _impl.risk_value
risk_grad = _impl.risk_grad
prox_step_raw = _impl.prox_step
knn_query = _impl.knn_query

loss_values = _kernels_np.loss_values
loss_derivs = _kernels_np.loss_derivs
