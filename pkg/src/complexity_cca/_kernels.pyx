# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled averaging kernels over a binary incidence stored in CSR form.

``indptr``/``indices`` describe the nonzero pattern of a 0/1 matrix; every
routine averages the entries of ``values`` selected by one row of the
pattern. Rows with no entries produce 0.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def row_means_1d(const long long[::1] indptr, const long long[::1] indices,
                 const double[::1] values):
    cdef Py_ssize_t nrows = indptr.shape[0] - 1
    cdef Py_ssize_t i, k, start, stop
    cdef double acc
    out = np.zeros(nrows, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(nrows):
            start = indptr[i]
            stop = indptr[i + 1]
            if stop == start:
                continue
            acc = 0.0
            for k in range(start, stop):
                acc = acc + values[indices[k]]
            o[i] = acc / (stop - start)
    return out


def row_means_2d(const long long[::1] indptr, const long long[::1] indices,
                 const double[:, ::1] values):
    cdef Py_ssize_t nrows = indptr.shape[0] - 1
    cdef Py_ssize_t ncols = values.shape[1]
    cdef Py_ssize_t i, j, k, start, stop, col
    cdef double inv
    out = np.zeros((nrows, ncols), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(nrows):
            start = indptr[i]
            stop = indptr[i + 1]
            if stop == start:
                continue
            for k in range(start, stop):
                col = indices[k]
                for j in range(ncols):
                    o[i, j] = o[i, j] + values[col, j]
            inv = 1.0 / (stop - start)
            for j in range(ncols):
                o[i, j] = o[i, j] * inv
    return out


def reciprocal_step(const long long[::1] prod_ptr, const long long[::1] prod_idx,
                    const long long[::1] ctry_ptr, const long long[::1] ctry_idx,
                    const double[::1] country_scores):
    """One country -> product -> country averaging round (C^c times a vector)."""
    cdef Py_ssize_t n = prod_ptr.shape[0] - 1
    cdef Py_ssize_t m = ctry_ptr.shape[0] - 1
    cdef Py_ssize_t i, k, start, stop
    cdef double acc
    prod = np.zeros(n, dtype=np.float64)
    out = np.zeros(m, dtype=np.float64)
    cdef double[::1] u = prod
    cdef double[::1] v = out
    with nogil:
        for i in range(n):
            start = prod_ptr[i]
            stop = prod_ptr[i + 1]
            if stop == start:
                continue
            acc = 0.0
            for k in range(start, stop):
                acc = acc + country_scores[prod_idx[k]]
            u[i] = acc / (stop - start)
        for i in range(m):
            start = ctry_ptr[i]
            stop = ctry_ptr[i + 1]
            if stop == start:
                continue
            acc = 0.0
            for k in range(start, stop):
                acc = acc + u[ctry_idx[k]]
            v[i] = acc / (stop - start)
    return out, prod
