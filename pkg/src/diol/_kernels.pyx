# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; bitwise twins of ``_kernels_py``."""

import numpy as np

from libc.math cimport sqrt, log, cos, sin, INFINITY
from libc.stdint cimport uint64_t, int64_t, uint8_t

BACKEND = "cython"

cdef double TWO_PI = 6.283185307179586
cdef double INV_2_53 = 1.0 / 9007199254740992.0
cdef uint64_t XORSHIFT_MULT = 0x2545F4914F6CDD1DULL


def rms_windows(x, Py_ssize_t window_len, Py_ssize_t stride):
    cdef const double[::1] xs = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xs.shape[0]
    if n < window_len:
        return np.empty(0, dtype=np.float64)
    cdef Py_ssize_t count = (n - window_len) // stride + 1
    out = np.empty(count, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t w, i, start
    cdef double acc, v
    for w in range(count):
        start = w * stride
        acc = 0.0
        for i in range(start, start + window_len):
            v = xs[i]
            acc += v * v
        o[w] = sqrt(acc / window_len)
    return out


def rolling_mean_std(x, Py_ssize_t w):
    cdef const double[::1] xs = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xs.shape[0]
    means = np.empty(n, dtype=np.float64)
    stds = np.empty(n, dtype=np.float64)
    cdef double[::1] mo = means
    cdef double[::1] so = stds
    cdef Py_ssize_t i, j, lo, m
    cdef double base, acc, shift, sq, d
    for i in range(n):
        lo = i - w + 1
        if lo < 0:
            lo = 0
        m = i - lo + 1
        base = xs[lo]
        acc = 0.0
        for j in range(lo, i + 1):
            acc += xs[j] - base
        shift = acc / m
        sq = 0.0
        for j in range(lo, i + 1):
            d = (xs[j] - base) - shift
            sq += d * d
        mo[i] = base + shift
        so[i] = sqrt(sq / m)
    return means, stds


def column_mean_std(X):
    cdef const double[:, ::1] rows = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t n = rows.shape[0]
    cdef Py_ssize_t dim = rows.shape[1]
    if n == 0:
        raise ValueError("column_mean_std needs at least one row")
    means = np.empty(dim, dtype=np.float64)
    stds = np.empty(dim, dtype=np.float64)
    cdef double[::1] mo = means
    cdef double[::1] so = stds
    cdef Py_ssize_t i, j
    cdef double b, acc, shift, sq, d
    for j in range(dim):
        b = rows[0, j]
        acc = 0.0
        for i in range(n):
            acc += rows[i, j] - b
        shift = acc / n
        sq = 0.0
        for i in range(n):
            d = (rows[i, j] - b) - shift
            sq += d * d
        mo[j] = b + shift
        so[j] = sqrt(sq / n)
    return means, stds


cdef inline Py_ssize_t _nearest(const double[:, ::1] Z, Py_ssize_t i,
                                const double[:, ::1] C, double* best_sq) noexcept nogil:
    cdef Py_ssize_t k = C.shape[0]
    cdef Py_ssize_t dim = C.shape[1]
    cdef Py_ssize_t c, j, best = 0
    cdef double acc, d
    best_sq[0] = INFINITY
    for c in range(k):
        acc = 0.0
        for j in range(dim):
            d = Z[i, j] - C[c, j]
            acc += d * d
        if acc < best_sq[0]:
            best_sq[0] = acc
            best = c
    return best


def assign_points(Z, C):
    cdef const double[:, ::1] zs = np.ascontiguousarray(Z, dtype=np.float64)
    cdef const double[:, ::1] cs = np.ascontiguousarray(C, dtype=np.float64)
    cdef Py_ssize_t n = zs.shape[0]
    labels = np.empty(n, dtype=np.int64)
    dists = np.empty(n, dtype=np.float64)
    cdef int64_t[::1] lo = labels
    cdef double[::1] do = dists
    cdef Py_ssize_t i
    cdef double best_sq
    with nogil:
        for i in range(n):
            lo[i] = _nearest(zs, i, cs, &best_sq)
            do[i] = sqrt(best_sq)
    return labels, dists


def lloyd(Z, C, int iterations):
    cdef const double[:, ::1] zs = np.ascontiguousarray(Z, dtype=np.float64)
    cents = np.array(C, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] cs = cents
    cdef Py_ssize_t n = zs.shape[0]
    cdef Py_ssize_t k = cs.shape[0]
    cdef Py_ssize_t dim = cs.shape[1]
    sums_arr = np.zeros((k, dim), dtype=np.float64)
    counts_arr = np.zeros(k, dtype=np.int64)
    cdef double[:, ::1] sums = sums_arr
    cdef int64_t[::1] counts = counts_arr
    cdef Py_ssize_t it, i, c, j, best
    cdef double best_sq
    with nogil:
        for it in range(iterations):
            for c in range(k):
                for j in range(dim):
                    sums[c, j] = 0.0
                counts[c] = 0
            for i in range(n):
                best = _nearest(zs, i, cs, &best_sq)
                for j in range(dim):
                    sums[best, j] += zs[i, j]
                counts[best] += 1
            for c in range(k):
                if counts[c]:
                    for j in range(dim):
                        cs[c, j] = sums[c, j] / counts[c]
    return cents


def xorshift_next(uint64_t state):
    """Advance a xorshift64* state; returns (new_state, output)."""
    cdef uint64_t x = state
    x ^= x >> 12
    x ^= x << 25
    x ^= x >> 27
    return x, x * XORSHIFT_MULT


def normal_fill(uint64_t state, Py_ssize_t n):
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef uint64_t x = state
    cdef Py_ssize_t i
    cdef double u1, u2
    with nogil:
        for i in range(n):
            x ^= x >> 12
            x ^= x << 25
            x ^= x >> 27
            u1 = <double>((x * XORSHIFT_MULT) >> 11) * INV_2_53
            x ^= x >> 12
            x ^= x << 25
            x ^= x >> 27
            u2 = <double>((x * XORSHIFT_MULT) >> 11) * INV_2_53
            o[i] = sqrt(-2.0 * log(1.0 - u1)) * cos(TWO_PI * u2)
    return out, x


def render_current(on_mask, noise, double amp, double mains_hz,
                   double sample_rate_hz, double noise_sd):
    cdef const uint8_t[::1] mask = np.ascontiguousarray(on_mask, dtype=np.uint8)
    cdef const double[::1] g = np.ascontiguousarray(noise, dtype=np.float64)
    cdef Py_ssize_t n = mask.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef double omega = TWO_PI * mains_hz
    cdef double v
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            if mask[i]:
                v = amp * sin(omega * (<double>i / sample_rate_hz))
            else:
                v = 0.0
            if noise_sd != 0.0:
                v = v + noise_sd * g[i]
            o[i] = v
    return out
