# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled evaluation of plane-wave superpositions over batches of events.

Each output row is accumulated by a single thread in a fixed wave order, so
results are bitwise independent of the thread count.
"""
from cython.parallel import prange

from libc.math cimport cos, sin

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "cython"

cdef int _num_threads = 1


def set_num_threads(int n):
    """Set the OpenMP thread count used by subsequent kernel calls."""
    global _num_threads
    _num_threads = n if n >= 1 else 1


def superpose_eval(double[:, ::1] phases, double complex[:, ::1] coeffs,
                   double[:, ::1] points):
    """sum_w exp(i phases[w] . x) coeffs[w] for each event row x of points."""
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t w = phases.shape[0]
    out_arr = np.zeros((n, 4), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, s
    cdef double ph, cr, ci
    cdef double complex e
    cdef int nt = _num_threads
    for i in prange(n, nogil=True, num_threads=nt, schedule="static"):
        for j in range(w):
            ph = (phases[j, 0] * points[i, 0] + phases[j, 1] * points[i, 1]
                  + phases[j, 2] * points[i, 2] + phases[j, 3] * points[i, 3])
            cr = cos(ph)
            ci = sin(ph)
            e = cr + 1j * ci
            for s in range(4):
                out[i, s] = out[i, s] + e * coeffs[j, s]
    return out_arr


def superpose_eval_grad(double[:, ::1] phases, double complex[:, ::1] coeffs,
                        double[:, ::1] points):
    """Values and spacetime gradients; grads[i, mu] = d_mu psi at points[i]."""
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t w = phases.shape[0]
    vals_arr = np.zeros((n, 4), dtype=np.complex128)
    grads_arr = np.zeros((n, 4, 4), dtype=np.complex128)
    cdef double complex[:, ::1] vals = vals_arr
    cdef double complex[:, :, ::1] grads = grads_arr
    cdef Py_ssize_t i, j, s, mu
    cdef double ph, cr, ci
    cdef double complex e, cv
    cdef int nt = _num_threads
    for i in prange(n, nogil=True, num_threads=nt, schedule="static"):
        for j in range(w):
            ph = (phases[j, 0] * points[i, 0] + phases[j, 1] * points[i, 1]
                  + phases[j, 2] * points[i, 2] + phases[j, 3] * points[i, 3])
            cr = cos(ph)
            ci = sin(ph)
            e = cr + 1j * ci
            for s in range(4):
                cv = e * coeffs[j, s]
                vals[i, s] = vals[i, s] + cv
                for mu in range(4):
                    grads[i, mu, s] = grads[i, mu, s] + 1j * phases[j, mu] * cv
    return vals_arr, grads_arr
