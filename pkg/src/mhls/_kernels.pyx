# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled segment kernels; see _kernels_py for the reference semantics."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def segment_sums(const double[::1] x, const cnp.int64_t[::1] bounds):
    cdef Py_ssize_t m = bounds.shape[0] - 1
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(m):
        acc = 0.0
        for j in range(bounds[i], bounds[i + 1]):
            acc += x[j]
        o[i] = acc
    return out


def expand(const double[::1] values, const cnp.int64_t[::1] bounds):
    cdef Py_ssize_t m = values.shape[0]
    out = np.empty(bounds[m], dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i, j
    cdef double v
    for i in range(m):
        v = values[i]
        for j in range(bounds[i], bounds[i + 1]):
            o[j] = v
    return out


def weighted_means(const double[::1] x, const double[::1] weights,
                   const cnp.int64_t[::1] bounds, const double[::1] inv_mass):
    cdef Py_ssize_t m = bounds.shape[0] - 1
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(m):
        acc = 0.0
        for j in range(bounds[i], bounds[i + 1]):
            acc += x[j] * weights[j]
        o[i] = acc * inv_mass[i]
    return out


def add_scaled_diff(double[::1] out, const double[::1] coeff,
                    const double[::1] cur, const double[::1] prev):
    cdef Py_ssize_t n = out.shape[0]
    cdef Py_ssize_t i
    for i in range(n):
        out[i] += coeff[i] * (cur[i] - prev[i])
    return np.asarray(out)
