# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch kernels; same contracts as the numpy fallback."""

import numpy as np
from libc.math cimport log, sqrt


def group_mul(const double[:, ::1] z1, const double[:, ::1] w1, const double[:, ::1] z2,
              const double[:, ::1] w2, const double[:, :, ::1] mats):
    cdef Py_ssize_t N = z1.shape[0], nz = z1.shape[1], m = w1.shape[1]
    cdef Py_ssize_t i, j, l, k
    cdef double acc, row
    z_out = np.empty((N, nz))
    w_out = np.empty((N, m))
    cdef double[:, ::1] zo = z_out
    cdef double[:, ::1] wo = w_out
    with nogil:
        for i in range(N):
            for j in range(nz):
                zo[i, j] = z1[i, j] + z2[i, j]
            for k in range(m):
                # antisymmetrised so that z2 = -z1 gives exactly zero
                acc = 0.0
                for j in range(nz):
                    row = 0.0
                    for l in range(j + 1, nz):
                        row = row + mats[k, j, l] * (z1[i, j] * z2[i, l] - z1[i, l] * z2[i, j])
                    acc = acc + row
                wo[i, k] = w1[i, k] + w2[i, k] + 0.5 * acc
    return z_out, w_out


def log_bubble(const double[:, ::1] z, const double[:, ::1] w, const double[::1] rho):
    cdef Py_ssize_t N = z.shape[0], nz = z.shape[1], m = w.shape[1]
    cdef Py_ssize_t i, j
    cdef double a, ww
    out = np.empty(N)
    cdef double[::1] o = out
    with nogil:
        for i in range(N):
            a = 0.0
            for j in range(nz):
                a = a + z[i, j] * z[i, j]
            a = rho[i] + 0.25 * a
            ww = 0.0
            for j in range(m):
                ww = ww + w[i, j] * w[i, j]
            o[i] = log(a * a + ww)
    return out


def hnorm(const double[:, ::1] z, const double[:, ::1] w):
    cdef Py_ssize_t N = z.shape[0], nz = z.shape[1], m = w.shape[1]
    cdef Py_ssize_t i, j
    cdef double zz, ww
    out = np.empty(N)
    cdef double[::1] o = out
    with nogil:
        for i in range(N):
            zz = 0.0
            for j in range(nz):
                zz = zz + z[i, j] * z[i, j]
            ww = 0.0
            for j in range(m):
                ww = ww + w[i, j] * w[i, j]
            o[i] = sqrt(sqrt(zz * zz / 16.0 + ww))
    return out


def omega(const double[:, ::1] z, const double[:, ::1] w, const double[:, :, ::1] mats):
    cdef Py_ssize_t N = z.shape[0], nz = z.shape[1], m = w.shape[1]
    cdef Py_ssize_t i, j, l, k
    cdef double zz, ww, a, b, jz
    out_arr = np.empty((N, nz + m + 1))
    cdef double[:, ::1] o = out_arr
    with nogil:
        for i in range(N):
            zz = 0.0
            for j in range(nz):
                zz = zz + z[i, j] * z[i, j]
            ww = 0.0
            for j in range(m):
                ww = ww + w[i, j] * w[i, j]
            a = 1.0 + 0.25 * zz
            b = a * a + ww
            for j in range(nz):
                jz = 0.0
                for k in range(m):
                    for l in range(nz):
                        jz = jz + w[i, k] * mats[k, j, l] * z[i, l]
                o[i, j] = (a * z[i, j] + jz) / b
            for k in range(m):
                o[i, nz + k] = 2.0 * w[i, k] / b
            o[i, nz + m] = (1.0 - zz * zz / 16.0 - ww) / b
    return out_arr
