# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-step kernels; ``_fallback`` mirrors every signature here."""
import numpy as np
from libc.math cimport log

cdef class TridiagFactor:
    """Thomas-algorithm factors of a fixed tridiagonal matrix."""
    cdef readonly double[::1] lower
    cdef readonly double[::1] cp
    cdef readonly double[::1] inv_den
    cdef readonly Py_ssize_t n

    def __init__(self, lower, diag, upper):
        cdef double[::1] lo = np.ascontiguousarray(lower, dtype=np.float64)
        cdef double[::1] dg = np.ascontiguousarray(diag, dtype=np.float64)
        cdef double[::1] up = np.ascontiguousarray(upper, dtype=np.float64)
        cdef Py_ssize_t n = dg.shape[0], i
        cdef double den
        self.n = n
        self.lower = lo
        self.cp = np.zeros(n, dtype=np.float64)
        self.inv_den = np.empty(n, dtype=np.float64)
        den = dg[0]
        if den == 0.0:
            raise ZeroDivisionError("singular tridiagonal matrix")
        self.inv_den[0] = 1.0 / den
        if n > 1:
            self.cp[0] = up[0] / den
        for i in range(1, n):
            den = dg[i] - lo[i - 1] * self.cp[i - 1]
            if den == 0.0:
                raise ZeroDivisionError("singular tridiagonal matrix")
            self.inv_den[i] = 1.0 / den
            if i < n - 1:
                self.cp[i] = up[i] / den


def factor_tridiag(lower, diag, upper):
    return TridiagFactor(lower, diag, upper)


def solve_factored(TridiagFactor fac, const double[::1] rhs, double[::1] out):
    cdef Py_ssize_t n = fac.n, i
    cdef double[::1] lo = fac.lower
    cdef double[::1] cp = fac.cp
    cdef double[::1] inv = fac.inv_den
    out[0] = rhs[0] * inv[0]
    for i in range(1, n):
        out[i] = (rhs[i] - lo[i - 1] * out[i - 1]) * inv[i]
    for i in range(n - 2, -1, -1):
        out[i] -= cp[i] * out[i + 1]


def cn_rhs(const double[::1] lower, const double[::1] diag, const double[::1] upper,
           const double[::1] x, double half_k, const double[::1] R, double k, double[::1] out):
    cdef Py_ssize_t n = x.shape[0], i
    cdef double tx
    for i in range(n):
        tx = diag[i] * x[i]
        if i < n - 1:
            tx += upper[i] * x[i + 1]
        if i > 0:
            tx += lower[i - 1] * x[i - 1]
        out[i] = x[i] + half_k * tx + k * R[i]


def incidence(const double[::1] U, const double[::1] V, double beta, double h, double[::1] G):
    cdef Py_ssize_t n = U.shape[0], i
    for i in range(n):
        G[i] = beta * U[i] * V[i] / (1.0 + h * V[i])


def tumor_source(const double[::1] U, const double[::1] I, const double[::1] G,
                 int growth_kind, double b, double d, double eps, double[::1] RU):
    cdef Py_ssize_t n = U.shape[0], i
    cdef double total, rate
    for i in range(n):
        total = U[i] + I[i]
        if growth_kind == 0:
            rate = b - d * total
        else:
            rate = b - d * log(total if total > eps else eps)
        RU[i] = U[i] * rate - G[i]


def clip_negative(double[::1] x, double tol):
    cdef Py_ssize_t n = x.shape[0], i
    cdef int count = 0
    for i in range(n):
        if x[i] < -tol:
            x[i] = 0.0
            count += 1
    return count
