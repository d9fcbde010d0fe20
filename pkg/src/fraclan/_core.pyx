# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Euler recursions for the built-in scalar drift catalogue.

Each kernel advances a batch of replicas through the full grid and
returns -1 on success or the first step index at which an iterate
exceeded the overflow cap.  The arithmetic matches the pure-Python
fallback operation for operation; outputs agree exactly for the linear
drift and to within tanh ULP noise (~1e-16, kept bounded by the
contraction) for the others.
"""

from libc.math cimport tanh as c_tanh, fabs

import numpy as np
cimport numpy as cnp

cnp.import_array()


def euler_fou(double[:, ::1] out, double[:, ::1] dbs, double theta, double dt, double cap):
    cdef Py_ssize_t m = out.shape[0]
    cdef Py_ssize_t n = dbs.shape[1]
    cdef Py_ssize_t i, k
    cdef double y
    for i in range(m):
        y = out[i, 0]
        for k in range(n):
            y = y + (-theta * y) * dt + dbs[i, k]
            if fabs(y) > cap:
                return k
            out[i, k + 1] = y
    return -1


def euler_tanh(double[:, ::1] out, double[:, ::1] dbs, double theta1, double theta2,
               double dt, double cap):
    cdef Py_ssize_t m = out.shape[0]
    cdef Py_ssize_t n = dbs.shape[1]
    cdef Py_ssize_t i, k
    cdef double y
    for i in range(m):
        y = out[i, 0]
        for k in range(n):
            y = y + (-theta1 * y + theta2 * c_tanh(y)) * dt + dbs[i, k]
            if fabs(y) > cap:
                return k
            out[i, k + 1] = y
    return -1


def euler_tanh_scale(double[:, ::1] out, double[:, ::1] dbs, double theta1, double theta2,
                     double dt, double cap):
    cdef Py_ssize_t m = out.shape[0]
    cdef Py_ssize_t n = dbs.shape[1]
    cdef Py_ssize_t i, k
    cdef double y
    for i in range(m):
        y = out[i, 0]
        for k in range(n):
            y = y + (-theta1 * y + c_tanh(theta2 * y)) * dt + dbs[i, k]
            if fabs(y) > cap:
                return k
            out[i, k + 1] = y
    return -1
