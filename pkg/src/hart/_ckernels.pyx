# cython: language_level=3
"""Compiled O(n*m) kernel sums used by the density estimators."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt, M_PI

cnp.import_array()


def bivariate_kde_parts(const double[::1] ex, const double[::1] es,
                        const double[::1] x, const double[::1] s,
                        const double[::1] w, double hx, double hs,
                        bint exclude_self=False):
    cdef Py_ssize_t n_eval = ex.shape[0]
    cdef Py_ssize_t n = x.shape[0]
    if exclude_self and n_eval != n:
        raise ValueError("exclude_self requires evaluating at the sample points")
    num_arr = np.zeros(n_eval, dtype=np.float64)
    den_arr = np.zeros(n_eval, dtype=np.float64)
    cdef double[::1] num = num_arr
    cdef double[::1] den = den_arr
    cdef double[::1] inv_bw = np.empty(n, dtype=np.float64)
    cdef double[::1] coef = np.empty(n, dtype=np.float64)
    cdef double inv_2hs2 = 0.5 / (hs * hs)
    cdef double root2pi = sqrt(2.0 * M_PI)
    cdef Py_ssize_t i, j
    cdef double ds, dx, ks, acc_num, acc_den, xi, si
    for j in range(n):
        inv_bw[j] = 1.0 / (hx * s[j])
        coef[j] = w[j] * inv_bw[j] / root2pi
    with nogil:
        for i in range(n_eval):
            xi = ex[i]
            si = es[i]
            acc_num = 0.0
            acc_den = 0.0
            for j in range(n):
                if exclude_self and j == i:
                    continue
                ds = si - s[j]
                ks = exp(-ds * ds * inv_2hs2)
                dx = (xi - x[j]) * inv_bw[j]
                acc_den += w[j] * ks
                acc_num += coef[j] * ks * exp(-0.5 * dx * dx)
            num[i] = acc_num
            den[i] = acc_den
    return num_arr, den_arr


def gaussian_kde(const double[::1] ev, const double[::1] sample, double h):
    cdef Py_ssize_t n_eval = ev.shape[0]
    cdef Py_ssize_t n = sample.shape[0]
    out_arr = np.zeros(n_eval, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double inv_h = 1.0 / h
    cdef double norm = 1.0 / (n * h * sqrt(2.0 * M_PI))
    cdef Py_ssize_t i, j
    cdef double d, acc
    with nogil:
        for i in range(n_eval):
            acc = 0.0
            for j in range(n):
                d = (ev[i] - sample[j]) * inv_h
                acc += exp(-0.5 * d * d)
            out[i] = acc * norm
    return out_arr
