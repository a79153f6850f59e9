"""Pure-Python implementations of the hot kernels.

Each function here has a compiled twin in ``_kernels.pyx`` with the same
signature and semantics. ``rlcs.kernels`` picks one at import time.
"""
from __future__ import annotations

import math

import numpy as np


def levenshtein(a: str, b: str) -> int:
    """Character-level edit distance over Unicode code points."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def cubic_kernel(x: float, a: float = -0.5) -> float:
    x = abs(x)
    if x <= 1.0:
        return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0
    if x < 2.0:
        return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a
    return 0.0


def cubic_taps(n_in: int, n_out: int, a: float = -0.5):
    """Clamped source indices and weights, shape (n_out, 4) each.

    Target index i sits at normalized position 2*(i+0.5)/n_out - 1, which maps
    back to source pixel space with the same half-pixel convention.
    """
    idx = np.empty((n_out, 4), dtype=np.intp)
    wts = np.empty((n_out, 4), dtype=np.float64)
    for i in range(n_out):
        u = 2.0 * (i + 0.5) / n_out - 1.0
        x = (u + 1.0) * 0.5 * n_in - 0.5
        x0 = math.floor(x)
        t = x - x0
        for k in range(4):
            idx[i, k] = min(max(x0 - 1 + k, 0), n_in - 1)
            wts[i, k] = cubic_kernel(t - (k - 1), a)
    return idx, wts


def cubic_resample(src: np.ndarray, out_h: int, out_w: int, a: float = -0.5) -> np.ndarray:
    """Separable cubic convolution of an (H, W, D) table onto an (out_h, out_w) grid."""
    src = np.ascontiguousarray(src, dtype=np.float64)
    h, w, _ = src.shape
    iy, wy = cubic_taps(h, out_h, a)
    ix, wx = cubic_taps(w, out_w, a)
    rows = np.einsum("hj,hjwd->hwd", wy, src[iy])
    return np.einsum("wi,hwid->hwd", wx, rows[:, ix, :])


def lpt(costs, m: int):
    """Assign items, already in processing order, to the least-loaded of m ranks.

    Ties between equally loaded ranks go to the lowest rank index.
    """
    loads = [0.0] * m
    rank_of = []
    for c in costs:
        r = min(range(m), key=loads.__getitem__)
        loads[r] += c
        rank_of.append(r)
    return rank_of, loads


def ffd(lengths, capacity: int):
    """First-fit over items already sorted by decreasing length.

    Returns the bin index of each item and the number of bins opened.
    """
    free: list[int] = []
    bin_of = []
    for n in lengths:
        for b, room in enumerate(free):
            if n <= room:
                free[b] = room - n
                bin_of.append(b)
                break
        else:
            free.append(capacity - n)
            bin_of.append(len(free) - 1)
    return bin_of, len(free)
