# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled ordered product of step unitaries."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def chain_product(const double complex[:, :, ::1] steps, const double complex[:, ::1] u0):
    """Left-multiply ``u0`` by every step in order; also track unitarity drift.

    Returns ``(U, max_defect)`` with ``max_defect`` the largest Frobenius norm
    of ``U^dagger U - I`` seen after any step.
    """
    cdef Py_ssize_t m = steps.shape[0]
    cdef Py_ssize_t n = u0.shape[0]
    cdef Py_ssize_t s, i, j, k
    cdef double complex acc
    cdef double defect, worst = 0.0, re, im
    out = np.array(u0, dtype=np.complex128, order="C")
    tmp = np.empty((n, n), dtype=np.complex128)
    cdef double complex[:, ::1] u = out
    cdef double complex[:, ::1] t = tmp
    for s in range(m):
        for i in range(n):
            for j in range(n):
                acc = 0
                for k in range(n):
                    acc = acc + steps[s, i, k] * u[k, j]
                t[i, j] = acc
        u[:, :] = t
        defect = 0.0
        for i in range(n):
            for j in range(n):
                acc = 0
                for k in range(n):
                    acc = acc + u[k, i].conjugate() * u[k, j]
                if i == j:
                    acc = acc - 1
                re = acc.real
                im = acc.imag
                defect += re * re + im * im
        defect = sqrt(defect)
        if defect > worst:
            worst = defect
    return out, worst
