# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-epoch kernels; same contracts as ``_kernels_py``."""
import numpy as np

cdef double PI = 3.141592653589793
cdef double TWO_PI = 6.283185307179586


def unwrap(raw, seg_starts):
    cdef const double[::1] x = np.ascontiguousarray(raw, dtype=np.float64)
    cdef const long long[::1] starts = np.ascontiguousarray(seg_starts, dtype=np.int64)
    cdef Py_ssize_t n = x.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] y = out
    cdef Py_ssize_t i, s = 0, nseg = starts.shape[0]
    cdef long long k = 0
    cdef double d
    for i in range(n):
        if s < nseg and i == starts[s]:
            k = 0
            s += 1
        elif i > 0:
            d = x[i] - x[i - 1]
            if d > PI:
                k -= 1
            elif d < -PI:
                k += 1
        y[i] = x[i] + TWO_PI * <double>k
    return out


def window_stats(phase, snr_db, starts, Py_ssize_t window_len):
    cdef const double[::1] p = np.ascontiguousarray(phase, dtype=np.float64)
    cdef const double[::1] q = np.ascontiguousarray(snr_db, dtype=np.float64)
    cdef const long long[::1] st = np.ascontiguousarray(starts, dtype=np.int64)
    cdef Py_ssize_t m = st.shape[0]
    var_out = np.empty(m, dtype=np.float64)
    mean_out = np.empty(m, dtype=np.float64)
    spread_out = np.empty(m, dtype=np.float64)
    cdef double[::1] v = var_out
    cdef double[::1] mu = mean_out
    cdef double[::1] sp = spread_out
    cdef Py_ssize_t w, j, a
    cdef double acc, mean, dev, lo, hi, qs
    for w in range(m):
        a = st[w]
        acc = 0.0
        qs = 0.0
        lo = q[a]
        hi = q[a]
        for j in range(a, a + window_len):
            acc += p[j]
            qs += q[j]
            if q[j] < lo:
                lo = q[j]
            if q[j] > hi:
                hi = q[j]
        mean = acc / window_len
        acc = 0.0
        for j in range(a, a + window_len):
            dev = p[j] - mean
            acc += dev * dev
        v[w] = acc / (window_len - 1)
        mu[w] = qs / window_len
        sp[w] = hi - lo
    return var_out, mean_out, spread_out
