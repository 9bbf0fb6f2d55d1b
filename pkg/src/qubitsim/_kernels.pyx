# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Monte Carlo kernels.

Every function here has a line-for-line twin in ``_fallback.py``; the two
must agree bit for bit on identical inputs.  Inputs are rows of uniforms in
[0, 1): two per sphere point (``z = 2u - 1``, ``phi = 2 pi u'``).  Sign
convention throughout: ``sign(0) = +1``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, sqrt

cnp.import_array()

cdef double TWO_PI = 6.283185307179586


cdef inline void _point(double u0, double u1, double* out) noexcept nogil:
    cdef double z = 2.0 * u0 - 1.0
    cdef double rho2 = 1.0 - z * z
    cdef double rho = sqrt(rho2) if rho2 > 0.0 else 0.0
    cdef double phi = TWO_PI * u1
    out[0] = rho * cos(phi)
    out[1] = rho * sin(phi)
    out[2] = z


cdef inline double _dot(const double* a, const double* b) noexcept nogil:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


cdef inline signed char _sgn(double a) noexcept nogil:
    return 1 if a >= 0.0 else -1


def model1_stay_count(const double[:, ::1] u, const double[::1] n, const double[::1] w):
    """Count draws with sign(n.x) == sign(w.x), ``w = R^T n``."""
    cdef Py_ssize_t i, N = u.shape[0]
    cdef long long stay = 0
    cdef double x[3]
    with nogil:
        for i in range(N):
            _point(u[i, 0], u[i, 1], x)
            if (_dot(&n[0], x) >= 0.0) == (_dot(&w[0], x) >= 0.0):
                stay += 1
    return stay


def model2_counts(const double[:, ::1] u, const double[::1] n, const double[::1] w):
    """Return ``(stay, r_plus)`` for the four-state model."""
    cdef Py_ssize_t i, N = u.shape[0]
    cdef long long stay = 0, r_plus = 0
    cdef double yp[3]
    cdef double ym[3]
    cdef double ap, am, a
    cdef double* yr
    with nogil:
        for i in range(N):
            _point(u[i, 0], u[i, 1], yp)
            _point(u[i, 2], u[i, 3], ym)
            ap = _dot(&n[0], yp)
            am = _dot(&n[0], ym)
            if ap * ap - am * am >= 0.0:
                r_plus += 1
                yr = yp
                a = ap
            else:
                yr = ym
                a = am
            if (a >= 0.0) == (_dot(&w[0], yr) >= 0.0):
                stay += 1
    return stay, r_plus


def bob_reduced_batch(const double[:, ::1] u, const double[::1] v0):
    cdef Py_ssize_t i, N = u.shape[0]
    r_arr = np.empty(N, dtype=np.int8)
    s0_arr = np.empty(N, dtype=np.int8)
    cdef signed char[::1] r = r_arr
    cdef signed char[::1] s0 = s0_arr
    cdef double yp[3]
    cdef double ym[3]
    cdef double p, m
    with nogil:
        for i in range(N):
            _point(u[i, 0], u[i, 1], yp)
            _point(u[i, 2], u[i, 3], ym)
            p = _dot(&v0[0], yp)
            m = _dot(&v0[0], ym)
            if p * p - m * m >= 0.0:
                r[i] = 1
                s0[i] = _sgn(p)
            else:
                r[i] = -1
                s0[i] = _sgn(m)
    return r_arr, s0_arr


def alice_reduced_batch(const double[:, ::1] u, const signed char[::1] r, const double[::1] v1):
    cdef Py_ssize_t i, N = u.shape[0]
    s1_arr = np.empty(N, dtype=np.int8)
    cdef signed char[::1] s1 = s1_arr
    cdef double y[3]
    with nogil:
        for i in range(N):
            if r[i] > 0:
                _point(u[i, 0], u[i, 1], y)
            else:
                _point(u[i, 2], u[i, 3], y)
            s1[i] = _sgn(_dot(&v1[0], y))
    return s1_arr


def bob_full_batch(const double[:, ::1] u, const signed char[::1] s0,
                   const double[::1] v0, const double[::1] n):
    cdef Py_ssize_t i, N = u.shape[0]
    s_arr = np.empty(N, dtype=np.int8)
    r_arr = np.empty(N, dtype=np.int8)
    cdef signed char[::1] s = s_arr
    cdef signed char[::1] r = r_arr
    cdef double yp[3]
    cdef double ym[3]
    cdef double p, m
    cdef double* yr
    with nogil:
        for i in range(N):
            _point(u[i, 0], u[i, 1], yp)
            _point(u[i, 2], u[i, 3], ym)
            p = _dot(&v0[0], yp)
            m = _dot(&v0[0], ym)
            if p * p - m * m >= 0.0:
                r[i] = 1
                yr = yp
            else:
                r[i] = -1
                yr = ym
            s[i] = s0[i] * _sgn(_dot(&v0[0], yr)) * _sgn(_dot(&n[0], yr))
    return s_arr, r_arr


def alice_full_batch(const double[:, ::1] u, const signed char[::1] s,
                     const signed char[::1] r, const double[::1] v1, const double[::1] n):
    cdef Py_ssize_t i, N = u.shape[0]
    s1_arr = np.empty(N, dtype=np.int8)
    cdef signed char[::1] s1 = s1_arr
    cdef double y[3]
    with nogil:
        for i in range(N):
            if r[i] > 0:
                _point(u[i, 0], u[i, 1], y)
            else:
                _point(u[i, 2], u[i, 3], y)
            s1[i] = s[i] * _sgn(_dot(&n[0], y)) * _sgn(_dot(&v1[0], y))
    return s1_arr
