"""Numpy implementations of the per-epoch kernels.

Used when the compiled ``_ckernels`` extension is unavailable, and as the
reference the compiled versions are tested against.
"""
import math

import numpy as np

TWO_PI = 2.0 * math.pi


def unwrap(raw, seg_starts):
    """Continuous phase: add 2*pi*K to each sample, K reset to 0 at each segment start."""
    raw = np.ascontiguousarray(raw, dtype=np.float64)
    n = raw.shape[0]
    steps = np.zeros(n, dtype=np.int64)
    if n > 1:
        d = np.diff(raw)
        steps[1:] = (d < -math.pi).astype(np.int64) - (d > math.pi).astype(np.int64)
    starts = np.asarray(seg_starts, dtype=np.int64)
    steps[starts] = 0
    total = np.cumsum(steps)
    seg_of = np.repeat(np.arange(len(starts)), np.diff(np.append(starts, n)))
    k = total - total[starts][seg_of]
    return raw + TWO_PI * k.astype(np.float64)


def window_stats(phase, snr_db, starts, window_len):
    """Per-window unbiased phase variance, mean SNR (dB) and SNR spread (dB)."""
    starts = np.asarray(starts, dtype=np.int64)
    if starts.size == 0:
        empty = np.empty(0, dtype=np.float64)
        return empty, empty.copy(), empty.copy()
    idx = starts[:, None] + np.arange(window_len)[None, :]
    block = np.asarray(phase, dtype=np.float64)[idx]
    dev = block - block.mean(axis=1)[:, None]
    var = (dev * dev).sum(axis=1) / (window_len - 1)
    snr = np.asarray(snr_db, dtype=np.float64)[idx]
    return var, snr.mean(axis=1), snr.max(axis=1) - snr.min(axis=1)
