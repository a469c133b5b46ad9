"""Pure-Python reference kernels.

Every function here has a twin in ``_kernels.pyx`` that must return
bitwise-identical results. Both sides accumulate in the same order, use the
same libm calls and never rely on fused multiply-add, so keep them in sync
when editing either one.
"""

import math

import numpy as np

BACKEND = "python"

MASK64 = 0xFFFFFFFFFFFFFFFF
XORSHIFT_MULT = 0x2545F4914F6CDD1D
TWO_PI = 6.283185307179586
INV_2_53 = 1.0 / 9007199254740992.0


def rms_windows(x, window_len, stride):
    xs = np.ascontiguousarray(x, dtype=np.float64).tolist()
    n = len(xs)
    if n < window_len:
        return np.empty(0, dtype=np.float64)
    count = (n - window_len) // stride + 1
    out = [0.0] * count
    for w in range(count):
        start = w * stride
        acc = 0.0
        for i in range(start, start + window_len):
            v = xs[i]
            acc += v * v
        out[w] = math.sqrt(acc / window_len)
    return np.array(out, dtype=np.float64)


def rolling_mean_std(x, w):
    # Deviations are taken from the first element of each window so that a
    # constant window yields its value and a zero spread exactly.
    xs = np.ascontiguousarray(x, dtype=np.float64).tolist()
    n = len(xs)
    means = [0.0] * n
    stds = [0.0] * n
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
        means[i] = base + shift
        stds[i] = math.sqrt(sq / m)
    return np.array(means, dtype=np.float64), np.array(stds, dtype=np.float64)


def column_mean_std(X):
    rows = np.ascontiguousarray(X, dtype=np.float64).tolist()
    n = len(rows)
    if n == 0:
        raise ValueError("column_mean_std needs at least one row")
    dim = len(rows[0])
    base = rows[0]
    means = [0.0] * dim
    stds = [0.0] * dim
    for j in range(dim):
        b = base[j]
        acc = 0.0
        for r in rows:
            acc += r[j] - b
        shift = acc / n
        sq = 0.0
        for r in rows:
            d = (r[j] - b) - shift
            sq += d * d
        means[j] = b + shift
        stds[j] = math.sqrt(sq / n)
    return np.array(means, dtype=np.float64), np.array(stds, dtype=np.float64)


def _nearest(z, cents):
    best = 0
    best_sq = math.inf
    for c, cent in enumerate(cents):
        acc = 0.0
        for a, b in zip(z, cent):
            d = a - b
            acc += d * d
        if acc < best_sq:
            best_sq = acc
            best = c
    return best, best_sq


def assign_points(Z, C):
    rows = np.ascontiguousarray(Z, dtype=np.float64).tolist()
    cents = np.ascontiguousarray(C, dtype=np.float64).tolist()
    n = len(rows)
    labels = [0] * n
    dists = [0.0] * n
    for i, z in enumerate(rows):
        best, best_sq = _nearest(z, cents)
        labels[i] = best
        dists[i] = math.sqrt(best_sq)
    return np.array(labels, dtype=np.int64), np.array(dists, dtype=np.float64)


def lloyd(Z, C, iterations):
    rows = np.ascontiguousarray(Z, dtype=np.float64).tolist()
    cents = np.ascontiguousarray(C, dtype=np.float64).tolist()
    k = len(cents)
    dim = len(cents[0]) if k else 0
    sums = [[0.0] * dim for _ in range(k)]
    counts = [0] * k
    for _ in range(iterations):
        for c in range(k):
            row = sums[c]
            for j in range(dim):
                row[j] = 0.0
            counts[c] = 0
        for z in rows:
            best, _ = _nearest(z, cents)
            row = sums[best]
            for j in range(dim):
                row[j] += z[j]
            counts[best] += 1
        for c in range(k):
            cnt = counts[c]
            if cnt:
                cent = cents[c]
                row = sums[c]
                for j in range(dim):
                    cent[j] = row[j] / cnt
    return np.array(cents, dtype=np.float64).reshape(k, dim)


def xorshift_next(state):
    """Advance a xorshift64* state; returns (new_state, output)."""
    x = state
    x ^= x >> 12
    x ^= (x << 25) & MASK64
    x ^= x >> 27
    return x, (x * XORSHIFT_MULT) & MASK64


def normal_fill(state, n):
    out = [0.0] * n
    x = state
    for i in range(n):
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        u1 = (((x * XORSHIFT_MULT) & MASK64) >> 11) * INV_2_53
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        u2 = (((x * XORSHIFT_MULT) & MASK64) >> 11) * INV_2_53
        out[i] = math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(TWO_PI * u2)
    return np.array(out, dtype=np.float64), x


def render_current(on_mask, noise, amp, mains_hz, sample_rate_hz, noise_sd):
    mask = np.ascontiguousarray(on_mask, dtype=np.uint8).tolist()
    g = np.ascontiguousarray(noise, dtype=np.float64).tolist()
    omega = TWO_PI * mains_hz
    n = len(mask)
    out = [0.0] * n
    for i in range(n):
        v = amp * math.sin(omega * (i / sample_rate_hz)) if mask[i] else 0.0
        if noise_sd != 0.0:
            v = v + noise_sd * g[i]
        out[i] = v
    return np.array(out, dtype=np.float64)
