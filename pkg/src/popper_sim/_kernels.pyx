# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Must stay call-compatible with ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()


def fresnel_direct(const double complex[::1] src, const double[::1] weights,
                   const double[::1] y_src, const double[::1] y_obs,
                   double k, double z):
    """Sum ``src[i] * weights[i] * exp(1j*k*(y_obs[j]-y_src[i])**2/(2z))`` over i."""
    cdef Py_ssize_t n_src = src.shape[0]
    cdef Py_ssize_t n_obs = y_obs.shape[0]
    cdef Py_ssize_t i, j
    cdef double half_k_over_z = 0.5 * k / z
    cdef double d, phase, c, s, acc_re, acc_im, a_re, a_im
    out = np.empty(n_obs, dtype=np.complex128)
    cdef double complex[::1] out_v = out
    # pre-weighted source, split into re/im for the inner loop
    cdef double[::1] w_re = np.empty(n_src)
    cdef double[::1] w_im = np.empty(n_src)
    for i in range(n_src):
        w_re[i] = src[i].real * weights[i]
        w_im[i] = src[i].imag * weights[i]
    with nogil:
        for j in range(n_obs):
            acc_re = 0.0
            acc_im = 0.0
            for i in range(n_src):
                a_re = w_re[i]
                a_im = w_im[i]
                if a_re == 0.0 and a_im == 0.0:
                    continue
                d = y_obs[j] - y_src[i]
                phase = half_k_over_z * d * d
                c = cos(phase)
                s = sin(phase)
                acc_re = acc_re + a_re * c - a_im * s
                acc_im = acc_im + a_re * s + a_im * c
            out_v[j] = acc_re + 1j * acc_im
    return out


def accumulate_intensity(const double complex[:, ::1] fields):
    """Row-ordered sum of ``|fields[r]|**2``; fixed order keeps results reproducible."""
    cdef Py_ssize_t n_rows = fields.shape[0]
    cdef Py_ssize_t n = fields.shape[1]
    cdef Py_ssize_t r, i
    cdef double re, im
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] out_v = out
    with nogil:
        for r in range(n_rows):
            for i in range(n):
                re = fields[r, i].real
                im = fields[r, i].imag
                out_v[i] = out_v[i] + (re * re + im * im)
    return out
