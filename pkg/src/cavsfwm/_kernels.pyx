# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loop of the pump-frequency integral of the JSA."""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport sin, cos, fabs

cnp.import_array()


def jsa_sum(const double[:, ::1] ksum, const double[:, ::1] weight,
            const long[::1] group, const double[::1] ksub, double length,
            int num_threads=1):
    """out[p] = sum_n weight[g, n] * phi(length * (ksum[g, n] - ksub[p])),

    with g = group[p] and phi(x) = sinc(x/2) exp(i x/2).
    """
    cdef Py_ssize_t npts = ksub.shape[0]
    cdef Py_ssize_t nn = ksum.shape[1]
    cdef Py_ssize_t p, n, g
    cdef double y, s, c, sc, re, im, wt
    out_re = np.zeros(npts, dtype=np.float64)
    out_im = np.zeros(npts, dtype=np.float64)
    cdef double[::1] ore = out_re
    cdef double[::1] oim = out_im
    for p in prange(npts, nogil=True, schedule="static", num_threads=num_threads):
        g = group[p]
        re = 0.0
        im = 0.0
        for n in range(nn):
            y = 0.5 * length * (ksum[g, n] - ksub[p])
            wt = weight[g, n]
            if fabs(y) < 1e-8:
                # sinc(y) = 1 - y^2/6 to double precision here
                sc = 1.0 - y * y / 6.0
            else:
                sc = sin(y) / y
            c = cos(y)
            s = sin(y)
            re = re + wt * sc * c
            im = im + wt * sc * s
        ore[p] = re
        oim[p] = im
    return out_re + 1j * out_im
