import numpy as np
import pytest

from cavsfwm import kernels
from cavsfwm._kernels_py import jsa_sum as jsa_sum_py

try:
    from cavsfwm._kernels import jsa_sum as jsa_sum_cy
except ImportError:  # pragma: no cover
    jsa_sum_cy = None

needs_cython = pytest.mark.skipif(jsa_sum_cy is None, reason="compiled kernel not built")


def _inputs(rng, groups=40, nodes=201, points=3000):
    ksum = rng.normal(2e7, 50.0, (groups, nodes))
    weight = rng.random((groups, nodes))
    group = rng.integers(0, groups, points).astype(np.int_)
    ksub = ksum[group, nodes // 2] + rng.normal(0.0, 300.0, points)
    # a few exact zeros of the phase argument exercise the sinc series branch
    ksub[:5] = ksum[group[:5], 0]
    return ksum, weight, group, ksub


def test_backend_is_reported():
    assert kernels.BACKEND in ("cython", "python")


@needs_cython
def test_backends_agree(rng):
    args = _inputs(rng)
    a = jsa_sum_cy(*args, 0.01, 1)
    b = jsa_sum_py(*args, 0.01)
    scale = np.max(np.abs(a))
    assert np.max(np.abs(a - b)) / scale < 1e-12


@needs_cython
def test_thread_count_does_not_change_result(rng):
    args = _inputs(rng)
    one = jsa_sum_cy(*args, 0.01, 1)
    four = jsa_sum_cy(*args, 0.01, 4)
    assert np.array_equal(one, four)


def test_small_argument_limit():
    ksum = np.zeros((1, 3))
    weight = np.ones((1, 3))
    out = kernels.jsa_sum(ksum, weight, np.zeros(1, dtype=np.int_), np.zeros(1), 1.0)
    assert out[0] == 3.0


def test_wrapper_validates_shapes():
    with pytest.raises(ValueError):
        kernels.jsa_sum(np.zeros((2, 3)), np.zeros((2, 4)), np.zeros(1, dtype=np.int_), np.zeros(1), 1.0)
    with pytest.raises(ValueError):
        kernels.jsa_sum(np.zeros((2, 3)), np.zeros((2, 3)), np.array([5]), np.zeros(1), 1.0)


def test_set_num_threads():
    old = kernels.get_num_threads()
    try:
        kernels.set_num_threads(0)
        assert kernels.get_num_threads() >= 1
        kernels.set_num_threads(2)
        assert kernels.get_num_threads() == 2
        with pytest.raises(ValueError):
            kernels.set_num_threads(-1)
    finally:
        kernels.set_num_threads(old)


def test_pure_python_env_forces_fallback():
    import subprocess
    import sys

    code = "import cavsfwm.kernels as k; print(k.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                         env={"CAVSFWM_PURE_PYTHON": "1", "PATH": ""}, check=True)
    assert out.stdout.strip() == "python"
