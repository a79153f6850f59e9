# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Semantics mirror rlcs._pykernels exactly."""
from libc.math cimport floor, fabs
from libc.stdlib cimport malloc, free

import numpy as np
cimport numpy as cnp

cnp.import_array()


def levenshtein(str a, str b):
    cdef Py_ssize_t n, m, i, j
    cdef Py_ssize_t *prev
    cdef Py_ssize_t *cur
    cdef Py_ssize_t *tmp
    cdef Py_ssize_t best, v
    cdef Py_UCS4 ca
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    n = len(a)
    m = len(b)
    if m == 0:
        return n
    prev = <Py_ssize_t *> malloc((m + 1) * sizeof(Py_ssize_t))
    cur = <Py_ssize_t *> malloc((m + 1) * sizeof(Py_ssize_t))
    if prev == NULL or cur == NULL:
        free(prev)
        free(cur)
        raise MemoryError()
    try:
        for j in range(m + 1):
            prev[j] = j
        for i in range(1, n + 1):
            ca = a[i - 1]
            cur[0] = i
            for j in range(1, m + 1):
                best = prev[j] + 1
                v = cur[j - 1] + 1
                if v < best:
                    best = v
                v = prev[j - 1] + (0 if ca == b[j - 1] else 1)
                if v < best:
                    best = v
                cur[j] = best
            tmp = prev
            prev = cur
            cur = tmp
        return prev[m]
    finally:
        free(prev)
        free(cur)


cdef inline double _cubic(double x, double a) nogil:
    x = fabs(x)
    if x <= 1.0:
        return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0
    if x < 2.0:
        return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a
    return 0.0


cdef void _taps(Py_ssize_t n_in, Py_ssize_t n_out, double a,
                Py_ssize_t[:, ::1] idx, double[:, ::1] wts) noexcept nogil:
    cdef Py_ssize_t i, k, j
    cdef double u, x, x0, t
    for i in range(n_out):
        u = 2.0 * (i + 0.5) / n_out - 1.0
        x = (u + 1.0) * 0.5 * n_in - 0.5
        x0 = floor(x)
        t = x - x0
        for k in range(4):
            j = <Py_ssize_t> x0 - 1 + k
            if j < 0:
                j = 0
            elif j > n_in - 1:
                j = n_in - 1
            idx[i, k] = j
            wts[i, k] = _cubic(t - (k - 1), a)


def cubic_resample(src, Py_ssize_t out_h, Py_ssize_t out_w, double a=-0.5):
    cdef double[:, :, ::1] s = np.ascontiguousarray(src, dtype=np.float64)
    cdef Py_ssize_t h = s.shape[0], w = s.shape[1], d = s.shape[2]
    cdef Py_ssize_t[:, ::1] iy = np.empty((out_h, 4), dtype=np.intp)
    cdef Py_ssize_t[:, ::1] ix = np.empty((out_w, 4), dtype=np.intp)
    cdef double[:, ::1] wy = np.empty((out_h, 4), dtype=np.float64)
    cdef double[:, ::1] wx = np.empty((out_w, 4), dtype=np.float64)
    rows_arr = np.zeros((out_h, w, d), dtype=np.float64)
    out_arr = np.zeros((out_h, out_w, d), dtype=np.float64)
    cdef double[:, :, ::1] rows = rows_arr
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t r, c, k, z
    cdef double wt
    with nogil:
        _taps(h, out_h, a, iy, wy)
        _taps(w, out_w, a, ix, wx)
        for r in range(out_h):
            for k in range(4):
                wt = wy[r, k]
                for c in range(w):
                    for z in range(d):
                        rows[r, c, z] += wt * s[iy[r, k], c, z]
        for r in range(out_h):
            for c in range(out_w):
                for k in range(4):
                    wt = wx[c, k]
                    for z in range(d):
                        out[r, c, z] += wt * rows[r, ix[c, k], z]
    return out_arr


def lpt(costs, Py_ssize_t m):
    cdef double[::1] cv = np.ascontiguousarray(costs, dtype=np.float64)
    cdef Py_ssize_t n = cv.shape[0], i, r, best
    loads_arr = np.zeros(m, dtype=np.float64)
    rank_arr = np.empty(n, dtype=np.intp)
    cdef double[::1] loads = loads_arr
    cdef Py_ssize_t[::1] rank_of = rank_arr
    with nogil:
        for i in range(n):
            best = 0
            for r in range(1, m):
                if loads[r] < loads[best]:
                    best = r
            loads[best] += cv[i]
            rank_of[i] = best
    return rank_arr.tolist(), loads_arr.tolist()


def ffd(lengths, long long capacity):
    cdef long long[::1] lv = np.ascontiguousarray(lengths, dtype=np.int64)
    cdef Py_ssize_t n = lv.shape[0], i, b, nbins = 0
    free_arr = np.empty(max(n, 1), dtype=np.int64)
    bin_arr = np.empty(n, dtype=np.intp)
    cdef long long[::1] room = free_arr
    cdef Py_ssize_t[::1] bin_of = bin_arr
    with nogil:
        for i in range(n):
            for b in range(nbins):
                if lv[i] <= room[b]:
                    room[b] -= lv[i]
                    bin_of[i] = b
                    break
            else:
                room[nbins] = capacity - lv[i]
                bin_of[i] = nbins
                nbins += 1
    return bin_arr.tolist(), nbins
