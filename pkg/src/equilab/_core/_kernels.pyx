# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: distance correlation and Kraskov MI.

Semantics match ``_kernels_py``; both are exercised by the same test suite.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, log, sqrt, INFINITY
from libc.stdlib cimport free, malloc

cnp.import_array()


cdef double _digamma(double x) nogil:
    # recurrence to x >= 10, then the asymptotic Bernoulli series
    cdef double acc = 0.0
    cdef double inv2, series
    while x < 10.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = inv2 * (1.0 / 12.0
             + inv2 * (-1.0 / 120.0
             + inv2 * (1.0 / 252.0
             + inv2 * (-1.0 / 240.0
             + inv2 * (1.0 / 132.0
             + inv2 * (-691.0 / 32760.0))))))
    return acc + log(x) - 0.5 / x - series


def dcor(x_in, y_in):
    """Sample distance correlation via direct O(n^2) double centering."""
    cdef double[::1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef double[::1] y = np.ascontiguousarray(y_in, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], i, j
    cdef double *arow = <double *>malloc(n * sizeof(double))
    cdef double *brow = <double *>malloc(n * sizeof(double))
    cdef double ag = 0.0, bg = 0.0
    cdef double d, ai, bi, sab = 0.0, saa = 0.0, sbb = 0.0, denom2, r2
    if arow == NULL or brow == NULL:
        free(arow); free(brow)
        raise MemoryError()
    with nogil:
        for i in range(n):
            arow[i] = 0.0
            brow[i] = 0.0
        for i in range(n):
            for j in range(n):
                d = fabs(x[i] - x[j])
                arow[i] += d
                ag += d
                d = fabs(y[i] - y[j])
                brow[i] += d
                bg += d
        for i in range(n):
            arow[i] /= n
            brow[i] /= n
        ag /= n * n
        bg /= n * n
        for i in range(n):
            for j in range(n):
                ai = fabs(x[i] - x[j]) - arow[i] - arow[j] + ag
                bi = fabs(y[i] - y[j]) - brow[i] - brow[j] + bg
                sab += ai * bi
                saa += ai * ai
                sbb += bi * bi
    free(arow)
    free(brow)
    denom2 = (saa / (n * n)) * (sbb / (n * n))
    if denom2 <= 0.0:
        return 0.0
    r2 = (sab / (n * n)) / sqrt(denom2)
    if r2 < 0.0:
        r2 = 0.0
    return sqrt(r2)


cdef Py_ssize_t _count_strict(double[::1] sorted_v, double lo, double hi) nogil:
    # number of elements v with lo < v < hi (open interval)
    cdef Py_ssize_t n = sorted_v.shape[0]
    cdef Py_ssize_t a = 0, b = n, mid
    # first index with v > lo
    while a < b:
        mid = (a + b) // 2
        if sorted_v[mid] <= lo:
            a = mid + 1
        else:
            b = mid
    cdef Py_ssize_t first = a
    a = first
    b = n
    # first index with v >= hi
    while a < b:
        mid = (a + b) // 2
        if sorted_v[mid] < hi:
            a = mid + 1
        else:
            b = mid
    return a - first


def ksg_mi(x_in, y_in, int k):
    """Kraskov estimator "(1)" of mutual information, in nats."""
    cdef double[::1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef double[::1] y = np.ascontiguousarray(y_in, dtype=np.float64)
    cdef double[::1] xs = np.sort(x_in).astype(np.float64)
    cdef double[::1] ys = np.sort(y_in).astype(np.float64)
    cdef Py_ssize_t n = x.shape[0], i, j, m
    cdef double *knn = <double *>malloc(k * sizeof(double))
    cdef double d, eps, psi_sum = 0.0
    cdef Py_ssize_t nx, ny
    if knn == NULL:
        raise MemoryError()
    with nogil:
        for i in range(n):
            for m in range(k):
                knn[m] = INFINITY
            for j in range(n):
                if j == i:
                    continue
                d = fabs(x[i] - x[j])
                if fabs(y[i] - y[j]) > d:
                    d = fabs(y[i] - y[j])
                if d < knn[k - 1]:
                    # insertion into the running k smallest
                    m = k - 1
                    while m > 0 and knn[m - 1] > d:
                        knn[m] = knn[m - 1]
                        m -= 1
                    knn[m] = d
            eps = knn[k - 1]
            nx = _count_strict(xs, x[i] - eps, x[i] + eps) - 1
            ny = _count_strict(ys, y[i] - eps, y[i] + eps) - 1
            if nx < 0:
                nx = 0
            if ny < 0:
                ny = 0
            psi_sum += _digamma(nx + 1.0) + _digamma(ny + 1.0)
    free(knn)
    return _digamma(k) + _digamma(n) - psi_sum / n
