# cython: boundscheck=False, wraparound=False, cdivision=True
"""Fused loops for empirical characteristic function evaluation.

Same call contract as the numpy fallback in rcfgan.kernels: forward returns
(re, im, cache) where cache holds the per-sample cos/sin matrices reused by
backward.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()


def ecf_forward(double[:, ::1] samples, double[:, ::1] freqs):
    cdef Py_ssize_t n = samples.shape[0]
    cdef Py_ssize_t m = samples.shape[1]
    cdef Py_ssize_t k = freqs.shape[0]
    re_arr = np.zeros(k, dtype=np.float64)
    im_arr = np.zeros(k, dtype=np.float64)
    cos_arr = np.empty((n, k), dtype=np.float64)
    sin_arr = np.empty((n, k), dtype=np.float64)
    cdef double[::1] re = re_arr
    cdef double[::1] im = im_arr
    cdef double[:, ::1] cos_p = cos_arr
    cdef double[:, ::1] sin_p = sin_arr
    cdef Py_ssize_t i, j, d
    cdef double proj, c, s, inv_n
    with nogil:
        for i in range(n):
            for j in range(k):
                proj = 0.0
                for d in range(m):
                    proj += samples[i, d] * freqs[j, d]
                c = cos(proj)
                s = sin(proj)
                cos_p[i, j] = c
                sin_p[i, j] = s
                re[j] += c
                im[j] += s
        inv_n = 1.0 / n
        for j in range(k):
            re[j] *= inv_n
            im[j] *= inv_n
    return re_arr, im_arr, (cos_arr, sin_arr)


def ecf_backward(double[:, ::1] samples, double[:, ::1] freqs, cache,
                 double[::1] g_re, double[::1] g_im,
                 bint need_g_samples, bint need_g_freqs):
    cdef Py_ssize_t n = samples.shape[0]
    cdef Py_ssize_t m = samples.shape[1]
    cdef Py_ssize_t k = freqs.shape[0]
    cdef double[:, ::1] cos_p = cache[0]
    cdef double[:, ::1] sin_p = cache[1]
    gx_arr = np.zeros((n, m), dtype=np.float64) if need_g_samples else None
    gt_arr = np.zeros((k, m), dtype=np.float64) if need_g_freqs else None
    cdef double[:, ::1] gx = gx_arr if need_g_samples else None
    cdef double[:, ::1] gt = gt_arr if need_g_freqs else None
    cdef Py_ssize_t i, j, d
    cdef double gp, inv_n = 1.0 / n
    with nogil:
        for i in range(n):
            for j in range(k):
                # d re/d proj = -sin, d im/d proj = cos, both scaled by 1/n
                gp = (g_im[j] * cos_p[i, j] - g_re[j] * sin_p[i, j]) * inv_n
                if need_g_samples:
                    for d in range(m):
                        gx[i, d] += gp * freqs[j, d]
                if need_g_freqs:
                    for d in range(m):
                        gt[j, d] += gp * samples[i, d]
    return gx_arr, gt_arr
