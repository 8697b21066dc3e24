"""Backend selection for the hot superposition kernels.

The compiled extension is preferred when present; the NumPy implementation
is the fallback. Set DIRACBOHM_KERNELS=numpy or DIRACBOHM_KERNELS=cython to
force a choice (forcing cython raises if the extension was not built).
Both backends implement the same contract:

    superpose_eval(phases, coeffs, points) -> values
    superpose_eval_grad(phases, coeffs, points) -> (values, grads)
    set_num_threads(n)

with phases (W, 4) float64, coeffs (W, 4) complex128, points (n, 4)
float64, values (n, 4) complex128, grads (n, 4, 4) complex128, all
C-contiguous.
"""
import os

_requested = os.environ.get("DIRACBOHM_KERNELS", "").strip().lower()

if _requested == "numpy":
    from . import numpy_backend as _impl
elif _requested == "cython":
    from . import _corekernels as _impl
elif _requested == "":
    try:
        from . import _corekernels as _impl
    except ImportError:
        from . import numpy_backend as _impl
else:
    raise ImportError(
        f"DIRACBOHM_KERNELS={_requested!r} is not a known backend "
        "(use 'numpy' or 'cython')"
    )

BACKEND_NAME = _impl.BACKEND_NAME
superpose_eval = _impl.superpose_eval
superpose_eval_grad = _impl.superpose_eval_grad
set_num_threads = _impl.set_num_threads
