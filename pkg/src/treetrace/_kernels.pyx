# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_kernels_py``.

Only the one- and two-dimensional grids are compiled; the dispatcher falls
back to numpy for higher dimensions.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, log1p, expm1, pow

cnp.import_array()


cdef inline double _abs2(double complex z) nogil:
    return z.real * z.real + z.imag * z.imag


def shift_energy_1d(const double complex[::1] v, const double[:, ::1] z):
    cdef Py_ssize_t M = v.shape[0]
    cdef Py_ssize_t S = z.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_arr = np.zeros(S)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, k, t
    cdef long m
    cdef double pos, frac, acc, w
    cdef int c
    with nogil:
        for k in range(S):
            pos = z[k, 0] * M
            m = <long> floor(pos)
            frac = pos - m
            acc = 0.0
            for i in range(M):
                for c in range(2):
                    w = frac if c else 1.0 - frac
                    if w == 0.0:
                        continue
                    t = i + m + c
                    if t < 0 or t >= M:
                        continue
                    acc += w * _abs2(v[t] - v[i])
            out[k] = acc / M
    return out_arr


def shift_energy_2d(const double complex[:, ::1] v, const double[:, ::1] z):
    cdef Py_ssize_t M = v.shape[0]
    cdef Py_ssize_t S = z.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_arr = np.zeros(S)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j, k, ti, tj
    cdef long m0, m1
    cdef double p0, p1, f0, f1, acc, w0, w1
    cdef int c0, c1
    with nogil:
        for k in range(S):
            p0 = z[k, 0] * M
            p1 = z[k, 1] * M
            m0 = <long> floor(p0)
            m1 = <long> floor(p1)
            f0 = p0 - m0
            f1 = p1 - m1
            acc = 0.0
            for c0 in range(2):
                w0 = f0 if c0 else 1.0 - f0
                if w0 == 0.0:
                    continue
                for c1 in range(2):
                    w1 = f1 if c1 else 1.0 - f1
                    if w1 == 0.0:
                        continue
                    for i in range(M):
                        ti = i + m0 + c0
                        if ti < 0 or ti >= M:
                            continue
                        for j in range(M):
                            tj = j + m1 + c1
                            if tj < 0 or tj >= M:
                                continue
                            acc += w0 * w1 * _abs2(v[ti, tj] - v[i, j])
            out[k] = acc / (M * M)
    return out_arr


def gagliardo_1d(const double complex[::1] v, double s):
    cdef Py_ssize_t M = v.shape[0]
    cdef Py_ssize_t a, delta
    cdef double b = 1.0 - 2.0 * s
    cdef double total = 0.0, S, D, inv
    with nogil:
        for delta in range(1, M):
            S = 0.0
            for a in range(M - delta):
                S += _abs2(v[a + delta] - v[a])
            if S == 0.0:
                continue
            if delta == 1:
                D = 2.0 - pow(2.0, b)
            else:
                inv = 1.0 / delta
                D = -pow(<double> delta, b) * (expm1(b * log1p(inv)) + expm1(b * log1p(-inv)))
            total += D * S
    return total
