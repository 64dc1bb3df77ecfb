# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of ``_pykernels``; same signatures, same tie-breaking."""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY, NAN

cnp.import_array()


def max_pair_quotient(dx, dy, double min_dist=0.0):
    cdef const double[:, ::1] X = np.ascontiguousarray(dx, dtype=np.float64)
    cdef const double[:, ::1] Y = np.ascontiguousarray(dy, dtype=np.float64)
    cdef Py_ssize_t n = X.shape[0], i, j
    cdef Py_ssize_t bi = -1, bj = -1
    cdef double best = -INFINITY, den, q
    for i in range(n):
        for j in range(i + 1, n):
            den = X[i, j]
            if den > min_dist:
                q = Y[i, j] / den
                if q > best:
                    best = q
                    bi = i
                    bj = j
    if bi < 0:
        return 0.0, -1, -1
    return best, bi, bj


def row_max_quotient(dx, dy, double radius=INFINITY, double min_dist=0.0):
    cdef const double[:, ::1] X = np.ascontiguousarray(dx, dtype=np.float64)
    cdef const double[:, ::1] Y = np.ascontiguousarray(dy, dtype=np.float64)
    cdef Py_ssize_t n = X.shape[0], i, j
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] O = out
    cdef double best, den, q
    cdef bint found
    for i in range(n):
        best = -INFINITY
        found = False
        for j in range(n):
            if j == i:
                continue
            den = X[i, j]
            if den > min_dist and den < radius:
                q = Y[i, j] / den
                found = True
                if q > best:
                    best = q
        O[i] = best if found else NAN
    return out


def directed_hausdorff(d):
    cdef const double[:, ::1] D = np.ascontiguousarray(d, dtype=np.float64)
    cdef Py_ssize_t n = D.shape[0], m = D.shape[1], i, j
    cdef double worst = -INFINITY, row
    for i in range(n):
        row = INFINITY
        for j in range(m):
            if D[i, j] < row:
                row = D[i, j]
                if row <= worst:  # this row cannot raise the maximum
                    break
        if row > worst:
            worst = row
    return worst


def weighted_inf(values, weights, d):
    cdef const double[:, ::1] V = np.ascontiguousarray(values, dtype=np.float64)
    cdef const double[:, ::1] W = np.ascontiguousarray(weights, dtype=np.float64)
    cdef const double[:, ::1] D = np.ascontiguousarray(d, dtype=np.float64)
    cdef Py_ssize_t nz = V.shape[0], m = V.shape[1], ny = D.shape[1], y, z, w
    out = np.empty((ny, m), dtype=np.float64)
    cdef double[:, ::1] O = out
    cdef double best, term, dist
    for y in range(ny):
        for w in range(m):
            O[y, w] = INFINITY
        for z in range(nz):
            dist = D[z, y]
            for w in range(m):
                term = V[z, w] + W[z, w] * dist
                if term < O[y, w]:
                    O[y, w] = term
    return out
