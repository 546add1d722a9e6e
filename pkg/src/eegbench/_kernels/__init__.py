"""Hot sequential kernels with a compiled implementation and a numpy fallback.

The compiled module is used when it imports; set ``EEGBENCH_PURE_PYTHON=1``
to force the fallback. ``BACKEND`` reports which one is active.
"""
import os

from . import _pykernels as python

compiled = None
if os.environ.get("EEGBENCH_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled
    except ImportError:  # extension not built
        compiled = None

_impl = compiled if compiled is not None else python
BACKEND = "cython" if compiled is not None else "python"

lstm_forward = _impl.lstm_forward
lstm_backward = _impl.lstm_backward
find_extrema = _impl.find_extrema
count_zero_crossings = _impl.count_zero_crossings

__all__ = ["BACKEND", "compiled", "python", "lstm_forward", "lstm_backward", "find_extrema", "count_zero_crossings"]
