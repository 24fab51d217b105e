# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops in ``_kernels_py``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def interval_areas(left, right):
    cdef const double[:, :, ::1] L = np.ascontiguousarray(left, dtype=np.float64)
    cdef const double[:, :, ::1] Rt = np.ascontiguousarray(right, dtype=np.float64)
    cdef Py_ssize_t n = L.shape[0], nf = L.shape[1], d = L.shape[2]
    out_arr = np.zeros((n, d, d))
    cdef double[:, :, ::1] out = out_arr
    cdef double[::1] pre = np.zeros(d)
    cdef Py_ssize_t m, k, i, j
    for m in range(n):
        for i in range(d):
            pre[i] = 0.0
        for k in range(nf):
            for i in range(d):
                for j in range(d):
                    out[m, i, j] += pre[i] * Rt[m, k, j]
            for i in range(d):
                pre[i] += L[m, k, i]
    return out_arr


def chen_table(left, right, area):
    cdef const double[:, ::1] L = np.ascontiguousarray(left, dtype=np.float64)
    cdef const double[:, ::1] Rt = np.ascontiguousarray(right, dtype=np.float64)
    cdef const double[:, :, ::1] A = np.ascontiguousarray(area, dtype=np.float64)
    cdef Py_ssize_t n = Rt.shape[0], d = Rt.shape[1]
    out_arr = np.zeros((n + 1, n + 1, d, d))
    cdef double[:, :, :, ::1] out = out_arr
    run_arr = np.zeros((n + 1, d))
    cdef double[:, ::1] run = run_arr
    cdef Py_ssize_t i, j, a, b
    for j in range(n):
        for i in range(j + 1):
            for a in range(d):
                for b in range(d):
                    out[i, j + 1, a, b] = (out[i, j, a, b] + A[j, a, b]
                                           + run[i, a] * Rt[j, b])
            for a in range(d):
                run[i, a] += L[j, a]
    return out_arr


def affine_recursion(mats, shifts, z0):
    z0 = np.asarray(z0, dtype=np.float64)
    squeeze = z0.ndim == 1
    cdef const double[:, :, ::1] M = np.ascontiguousarray(mats, dtype=np.float64)
    sh = np.ascontiguousarray(shifts, dtype=np.float64)
    if squeeze:
        sh = sh[:, :, None]
        z0 = z0[:, None]
    cdef const double[:, :, ::1] S = np.ascontiguousarray(sh)
    cdef Py_ssize_t n = M.shape[0], p = M.shape[1], k = z0.shape[1]
    out_arr = np.empty((n + 1, p, k))
    cdef double[:, :, ::1] out = out_arr
    out_arr[0] = z0
    cdef Py_ssize_t j, a, b, c
    cdef double acc
    for j in range(n):
        for a in range(p):
            for c in range(k):
                acc = S[j, a, c]
                for b in range(p):
                    acc = acc + M[j, a, b] * out[j, b, c]
                out[j + 1, a, c] = acc
    if squeeze:
        return out_arr[:, :, 0]
    return out_arr
