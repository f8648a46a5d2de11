# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled resolvent sums over quadrature nodes.

Each node needs one small dense complex LU factorization; doing it in a
single C loop avoids allocating an ``(N, n, n)`` stack of shifted matrices
and the per-matrix LAPACK call overhead that dominates for small ``n``.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef double complex cplx


cdef inline double _abs2(cplx z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef int _lu(cplx* a, int* piv, int n) noexcept nogil:
    """In-place LU with partial pivoting of the row-major n x n matrix ``a``."""
    cdef int i, j, k, p
    cdef double best, cur
    cdef cplx t, f
    for k in range(n):
        p = k
        best = _abs2(a[k * n + k])
        for i in range(k + 1, n):
            cur = _abs2(a[i * n + k])
            if cur > best:
                best = cur
                p = i
        if best == 0.0:
            return -1
        piv[k] = p
        if p != k:
            for j in range(n):
                t = a[k * n + j]
                a[k * n + j] = a[p * n + j]
                a[p * n + j] = t
        for i in range(k + 1, n):
            f = a[i * n + k] / a[k * n + k]
            a[i * n + k] = f
            if f != 0:
                for j in range(k + 1, n):
                    a[i * n + j] = a[i * n + j] - f * a[k * n + j]
    return 0


cdef void _lu_solve(const cplx* lu, const int* piv, cplx* x, int n) noexcept nogil:
    """Solve ``A x = b`` in place given the factorization from ``_lu``."""
    cdef int i, j
    cdef cplx t
    for i in range(n):
        if piv[i] != i:
            t = x[i]
            x[i] = x[piv[i]]
            x[piv[i]] = t
    for i in range(n):
        for j in range(i):
            x[i] = x[i] - lu[i * n + j] * x[j]
    for i in range(n - 1, -1, -1):
        for j in range(i + 1, n):
            x[i] = x[i] - lu[i * n + j] * x[j]
        x[i] = x[i] / lu[i * n + i]


def resolvent_sum(cplx[:, ::1] Y, cplx[::1] mu, cplx[:, :, ::1] K):
    """``sum_q K[q] @ inv(Y - mu[q] I)``."""
    cdef int n = Y.shape[0]
    cdef Py_ssize_t nq = mu.shape[0]
    cdef Py_ssize_t q
    cdef int i, j, r, status = 0
    out_arr = np.zeros((n, n), dtype=np.complex128)
    cdef cplx[:, ::1] out = out_arr
    a_arr = np.empty(n * n, dtype=np.complex128)
    x_arr = np.empty(n, dtype=np.complex128)
    piv_arr = np.empty(n, dtype=np.intc)
    cdef cplx[::1] a = a_arr
    cdef cplx[::1] x = x_arr
    cdef int[::1] piv = piv_arr
    with nogil:
        for q in range(nq):
            # factor (Y - mu)^T so that row r of K[q] solves x^T (Y - mu) = K[q][r]
            for i in range(n):
                for j in range(n):
                    a[i * n + j] = Y[j, i]
                a[i * n + i] = a[i * n + i] - mu[q]
            if _lu(&a[0], &piv[0], n) != 0:
                status = -1
                break
            for r in range(n):
                for j in range(n):
                    x[j] = K[q, r, j]
                _lu_solve(&a[0], &piv[0], &x[0], n)
                for j in range(n):
                    out[r, j] = out[r, j] + x[j]
    if status != 0:
        raise np.linalg.LinAlgError("singular shifted matrix at a quadrature node")
    return out_arr


def sandwich_sum(cplx[:, ::1] L, cplx[:, ::1] R, cplx[::1] mu, cplx[:, :, ::1] K):
    """``sum_q inv(L - mu[q] I) @ K[q] @ inv(R - mu[q] I)``."""
    cdef int n = L.shape[0]
    cdef Py_ssize_t nq = mu.shape[0]
    cdef Py_ssize_t q
    cdef int i, j, r, status = 0
    out_arr = np.zeros((n, n), dtype=np.complex128)
    cdef cplx[:, ::1] out = out_arr
    al_arr = np.empty(n * n, dtype=np.complex128)
    ar_arr = np.empty(n * n, dtype=np.complex128)
    t_arr = np.empty(n * n, dtype=np.complex128)
    x_arr = np.empty(n, dtype=np.complex128)
    pl_arr = np.empty(n, dtype=np.intc)
    pr_arr = np.empty(n, dtype=np.intc)
    cdef cplx[::1] al = al_arr
    cdef cplx[::1] ar = ar_arr
    cdef cplx[::1] t = t_arr
    cdef cplx[::1] x = x_arr
    cdef int[::1] pl = pl_arr
    cdef int[::1] pr = pr_arr
    with nogil:
        for q in range(nq):
            for i in range(n):
                for j in range(n):
                    ar[i * n + j] = R[j, i]
                    al[i * n + j] = L[i, j]
                ar[i * n + i] = ar[i * n + i] - mu[q]
                al[i * n + i] = al[i * n + i] - mu[q]
            if _lu(&ar[0], &pr[0], n) != 0 or _lu(&al[0], &pl[0], n) != 0:
                status = -1
                break
            # t = K[q] @ inv(R - mu), row by row
            for r in range(n):
                for j in range(n):
                    x[j] = K[q, r, j]
                _lu_solve(&ar[0], &pr[0], &x[0], n)
                for j in range(n):
                    t[r * n + j] = x[j]
            # out += inv(L - mu) @ t, column by column
            for j in range(n):
                for r in range(n):
                    x[r] = t[r * n + j]
                _lu_solve(&al[0], &pl[0], &x[0], n)
                for r in range(n):
                    out[r, j] = out[r, j] + x[r]
    if status != 0:
        raise np.linalg.LinAlgError("singular shifted matrix at a quadrature node")
    return out_arr
