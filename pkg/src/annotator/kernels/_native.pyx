# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot per-point and per-bucket kernels.

Mirrors ``_python.py`` exactly; the scoring loops dominate campaign runtime
on real-size scans, which is why they live here.
"""

from libc.math cimport floor, log

import numpy as np


def floor_coords(xyz, double voxel_size):
    cdef const float[:, ::1] pf
    cdef const double[:, ::1] pd
    cdef Py_ssize_t n = xyz.shape[0]
    out = np.empty((n, 3), dtype=np.int64)
    cdef long long[:, ::1] o = out
    cdef Py_ssize_t i, j
    if xyz.dtype == np.float32:
        pf = xyz
        for i in range(n):
            for j in range(3):
                o[i, j] = <long long> floor((<double> pf[i, j]) / voxel_size)
    else:
        pd = np.ascontiguousarray(xyz, dtype=np.float64)
        for i in range(n):
            for j in range(3):
                o[i, j] = <long long> floor(pd[i, j] / voxel_size)
    return out


def point_entropies(probs):
    cdef const double[:, ::1] p = np.ascontiguousarray(probs, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0], k = p.shape[1]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i, j
    cdef double s, v
    for i in range(n):
        s = 0.0
        for j in range(k):
            v = p[i, j]
            if v > 0.0:
                s -= v * log(v)
        o[i] = s
    return out


def point_margins(probs):
    cdef const double[:, ::1] p = np.ascontiguousarray(probs, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0], k = p.shape[1]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i, j
    cdef double best, second, v
    for i in range(n):
        if p[i, 0] >= p[i, 1]:
            best = p[i, 0]
            second = p[i, 1]
        else:
            best = p[i, 1]
            second = p[i, 0]
        for j in range(2, k):
            v = p[i, j]
            if v > best:
                second = best
                best = v
            elif v > second:
                second = v
        o[i] = best - second
    return out


def argmax_labels(probs):
    cdef const double[:, ::1] p = np.ascontiguousarray(probs, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0], k = p.shape[1]
    out = np.empty(n, dtype=np.int32)
    cdef int[::1] o = out
    cdef Py_ssize_t i, j, best_j
    cdef double best
    for i in range(n):
        best = p[i, 0]
        best_j = 0
        for j in range(1, k):
            if p[i, j] > best:
                best = p[i, j]
                best_j = j
        o[i] = <int> (best_j + 1)
    return out


def bucket_max(values, order, offsets):
    cdef const double[::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef const long long[::1] ordv = np.ascontiguousarray(order, dtype=np.int64)
    cdef const long long[::1] offs = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef Py_ssize_t m = offs.shape[0] - 1
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t b
    cdef long long i
    cdef double best, x
    for b in range(m):
        best = v[ordv[offs[b]]]
        for i in range(offs[b] + 1, offs[b + 1]):
            x = v[ordv[i]]
            if x > best:
                best = x
        o[b] = best
    return out


def bucket_label_entropy(labels, order, offsets, int class_count):
    cdef const int[::1] lab = np.ascontiguousarray(labels, dtype=np.int32)
    cdef const long long[::1] ordv = np.ascontiguousarray(order, dtype=np.int64)
    cdef const long long[::1] offs = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef Py_ssize_t m = offs.shape[0] - 1
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    counts_arr = np.zeros(class_count + 1, dtype=np.int64)
    cdef long long[::1] counts = counts_arr
    cdef Py_ssize_t b, c
    cdef long long i, size
    cdef double s, frac
    for b in range(m):
        for c in range(class_count + 1):
            counts[c] = 0
        size = offs[b + 1] - offs[b]
        for i in range(offs[b], offs[b + 1]):
            counts[lab[ordv[i]]] += 1
        s = 0.0
        for c in range(class_count + 1):
            if counts[c] > 0:
                frac = (<double> counts[c]) / (<double> size)
                s -= frac * log(frac)
        o[b] = s
    return out
