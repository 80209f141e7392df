"""Compiled and numpy kernels must agree."""
import math
import os

import numpy as np
import pytest

from conftest import _ckernels
from rmode_toa import _kernels, _kernels_py

needs_ext = pytest.mark.skipif(_ckernels is None, reason="extension not built")


def test_backend_selected():
    assert _kernels.BACKEND in ("cython", "python")
    if os.environ.get("RMODE_TOA_PURE"):
        assert _kernels.BACKEND == "python"
    elif _ckernels is not None:
        assert _kernels.BACKEND == "cython"


@needs_ext
@pytest.mark.parametrize("seed", range(10))
def test_unwrap_bitwise_equal(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 3000))
    raw = np.mod(np.cumsum(rng.uniform(-3.1, 3.1, n)), 2 * math.pi)
    starts = np.unique(np.concatenate([[0], rng.integers(1, max(n, 2), 5)]))
    starts = starts[starts < n].astype(np.int64)
    a = _kernels_py.unwrap(raw, starts)
    b = _ckernels.unwrap(raw, starts)
    assert np.array_equal(a, b)


@needs_ext
@pytest.mark.parametrize("seed", range(10))
def test_window_stats_agree(seed):
    rng = np.random.default_rng(100 + seed)
    n = 5000
    w = int(rng.integers(2, 400))
    phase = rng.normal(rng.uniform(-1e3, 1e3), 0.3, n)
    snr = rng.uniform(-5, 25, n)
    starts = np.arange(0, n - w + 1, w, dtype=np.int64)
    for x, y in zip(_kernels_py.window_stats(phase, snr, starts, w), _ckernels.window_stats(phase, snr, starts, w)):
        np.testing.assert_allclose(x, y, rtol=1e-10, atol=0)


def test_empty_windows(kernels):
    v, m, s = kernels.window_stats(np.zeros(3), np.zeros(3), np.empty(0, dtype=np.int64), 5)
    assert v.size == m.size == s.size == 0


def test_env_forces_python_fallback():
    import subprocess
    import sys

    code = "import rmode_toa; print(rmode_toa.BACKEND)"
    env = {"RMODE_TOA_PURE": "1", "PATH": "/usr/bin:/bin"}
    r = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env)
    assert r.stdout.strip() == "python"
