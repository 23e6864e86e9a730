"""Compiled kernels for sorted-weight (Lovász-type) proximal maps."""

import numba
import numpy as np


@numba.njit(cache=False)
def _pav_nonincreasing(v, out, sums, counts):
    # least-squares fit of a non-increasing sequence to v (pool adjacent violators)
    n = v.shape[0]
    nb = 0
    for i in range(n):
        sums[nb] = v[i]
        counts[nb] = 1
        nb += 1
        while nb > 1 and sums[nb - 2] / counts[nb - 2] < sums[nb - 1] / counts[nb - 1]:
            sums[nb - 2] += sums[nb - 1]
            counts[nb - 2] += counts[nb - 1]
            nb -= 1
    pos = 0
    for b in range(nb):
        m = sums[b] / counts[b]
        for _ in range(counts[b]):
            out[pos] = m
            pos += 1


@numba.njit(cache=False)
def _sorted_prox_l1(s, y, lam, out, sums, counts, buf):
    # prox of lam * <y, x_sorted_desc> evaluated on an already-sorted s
    for i in range(s.shape[0]):
        buf[i] = s[i] - lam * y[i]
    _pav_nonincreasing(buf, out, sums, counts)


@numba.njit(cache=False)
def _dot(a, b):
    acc = 0.0
    for i in range(a.shape[0]):
        acc += a[i] * b[i]
    return acc


@numba.njit(cache=False)
def sorted_weight_prox_batch(sorted_rows, y, eta, power):
    """Prox of ``eta * <y, sort_desc(x)>**power`` for each row.

    Rows must already be sorted in non-increasing order and ``y`` must be
    non-increasing; for ``power == 2`` it must also sum to zero. The output
    rows stay sorted. ``power == 2`` is solved by bisection on the effective
    weight ``lam = 2 * eta * <y, x*>``.
    """
    n, k = sorted_rows.shape
    out = np.empty_like(sorted_rows)
    sums = np.empty(k)
    counts = np.empty(k, dtype=np.int64)
    buf = np.empty(k)
    tmp = np.empty(k)
    for r in range(n):
        s = sorted_rows[r]
        if power == 1:
            _sorted_prox_l1(s, y, eta, out[r], sums, counts, buf)
            continue
        lo = 0.0
        hi = 2.0 * eta * max(_dot(y, s), 0.0)
        if hi == 0.0:
            for i in range(k):
                out[r, i] = s[i]
            continue
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            _sorted_prox_l1(s, y, mid, tmp, sums, counts, buf)
            if mid < 2.0 * eta * _dot(y, tmp):
                lo = mid
            else:
                hi = mid
        _sorted_prox_l1(s, y, 0.5 * (lo + hi), out[r], sums, counts, buf)
    return out
