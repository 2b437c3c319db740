"""Backend selection for the hot JSA kernel.

The compiled extension is used when it imports; setting the environment
variable ``CAVSFWM_PURE_PYTHON=1`` forces the numpy fallback.
"""
import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py.jsa_sum
if os.environ.get("CAVSFWM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels

        _impl = _kernels.jsa_sum
        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        pass

_num_threads = 1


def set_num_threads(n):
    """Set worker threads for the compiled kernel (0 = all CPUs)."""
    global _num_threads
    n = int(n)
    if n < 0:
        raise ValueError("thread count must be >= 0")
    _num_threads = n if n > 0 else (os.cpu_count() or 1)


def get_num_threads():
    return _num_threads


def jsa_sum(ksum, weight, group, ksub, length):
    # Each output point is a serial sum in fixed order, so results do not
    # depend on the thread count.
    ksum = np.ascontiguousarray(ksum, dtype=np.float64)
    weight = np.ascontiguousarray(weight, dtype=np.float64)
    group = np.ascontiguousarray(group, dtype=np.int_)
    ksub = np.ascontiguousarray(ksub, dtype=np.float64)
    if ksum.shape != weight.shape:
        raise ValueError("ksum and weight must have the same shape")
    if group.shape != ksub.shape:
        raise ValueError("group and ksub must have the same shape")
    if group.size and (group.min() < 0 or group.max() >= ksum.shape[0]):
        raise ValueError("group index out of range")
    return _impl(ksum, weight, group, ksub, float(length), _num_threads)
