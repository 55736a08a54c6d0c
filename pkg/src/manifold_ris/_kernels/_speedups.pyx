# cython: boundscheck=False, wraparound=False, cdivision=True
"""Fused single-pass kernels for the unit-modulus manifold.

Same contracts as ``_pure``; see that module for documentation.  The
point of these is to collapse the chains of small numpy temporaries
(each a full pass over the array) into one loop, which matters because
the solvers call them every iteration on vectors of length 16..256.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport hypot, fabs

cnp.import_array()


def ccm_project(const double complex[::1] x, const double complex[::1] v):
    cdef Py_ssize_t n = x.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] o = out
    cdef Py_ssize_t i
    cdef double r
    for i in range(n):
        r = v[i].real * x[i].real + v[i].imag * x[i].imag
        o[i] = v[i] - r * x[i]
    return out


def ccm_retract(const double complex[::1] x, const double complex[::1] v):
    cdef Py_ssize_t n = x.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] o = out
    cdef Py_ssize_t i
    cdef double complex s
    cdef double m, min_mod = 1.0
    if n > 0:
        min_mod = hypot(x[0].real + v[0].real, x[0].imag + v[0].imag)
    for i in range(n):
        s = x[i] + v[i]
        m = hypot(s.real, s.imag)
        if m < min_mod:
            min_mod = m
        if m == 0.0:
            o[i] = s
        else:
            o[i] = s / m
    if min_mod == 0.0:
        # mirror the fallback: hand back the raw sum for diagnostics
        for i in range(n):
            o[i] = x[i] + v[i]
    return out, min_mod


def ccm_normalize(const double complex[::1] x):
    cdef Py_ssize_t n = x.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] o = out
    cdef Py_ssize_t i
    for i in range(n):
        o[i] = x[i] / hypot(x[i].real, x[i].imag)
    return out


def ccm_max_dev(const double complex[::1] x):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i
    cdef double d, worst = 0.0
    for i in range(n):
        d = fabs(hypot(x[i].real, x[i].imag) - 1.0)
        if d > worst:
            worst = d
    return worst


def ccm_tangent_dev(const double complex[::1] x, const double complex[::1] v):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i
    cdef double d, worst = 0.0
    for i in range(n):
        d = fabs(v[i].real * x[i].real + v[i].imag * x[i].imag)
        if d > worst:
            worst = d
    return worst


def real_inner(const double complex[::1] u, const double complex[::1] v):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(n):
        acc += u[i].real * v[i].real + u[i].imag * v[i].imag
    return acc
