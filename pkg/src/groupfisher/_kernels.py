"""Select the compiled kernels when built, else fall back to numpy.

Set ``GROUPFISHER_PURE_PYTHON=1`` to force the fallback.

The compiled loops win on short arrays and on the weighted outer sum; on
long arrays numpy's vectorized exp/expm1/sinh are faster, so elementwise
kernels hand over to numpy above a measured size (see benchmarks/).
"""

import os

from . import _pykernels

# crossover sizes measured with benchmarks/bench_kernels.py
EVAL_NUMPY_MIN = 256
SUM_NUMPY_MIN = 1024

if os.environ.get("GROUPFISHER_PURE_PYTHON", "") not in ("", "0"):
    _ckernels = None
else:
    try:
        from . import _ckernels
    except ImportError:
        _ckernels = None

if _ckernels is None:
    from ._pykernels import group_eval, weighted_group_sum, weighted_outer_sum

    BACKEND = "python"
else:
    from ._ckernels import weighted_outer_sum

    BACKEND = "cython"

    def group_eval(kind, p0, p1, t):
        impl = _pykernels if getattr(t, "size", 1) >= EVAL_NUMPY_MIN else _ckernels
        return impl.group_eval(kind, p0, p1, t)

    def weighted_group_sum(kind, p0, p1, logw, logp, t):
        impl = _pykernels if getattr(t, "size", 1) >= SUM_NUMPY_MIN else _ckernels
        return impl.weighted_group_sum(kind, p0, p1, logw, logp, t)


__all__ = ["BACKEND", "group_eval", "weighted_group_sum", "weighted_outer_sum"]
