# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: block Gauss-Seidel sweeps and block row products."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline void _relax(Py_ssize_t j,
                        const double[:, :, ::1] dinv,
                        const double[:, :, ::1] off,
                        const cnp.int64_t[::1] ptr,
                        const cnp.int64_t[::1] nbr,
                        const cnp.int64_t[::1] blk,
                        const double[:, ::1] rhs,
                        double[:, ::1] x) noexcept nogil:
    cdef double r[5]
    cdef Py_ssize_t a, b, p, k, e
    cdef double s
    for a in range(5):
        r[a] = rhs[j, a]
    for p in range(ptr[j], ptr[j + 1]):
        k = nbr[p]
        e = blk[p]
        for a in range(5):
            s = 0.0
            for b in range(5):
                s = s + off[e, a, b] * x[k, b]
            r[a] = r[a] - s
    for a in range(5):
        s = 0.0
        for b in range(5):
            s = s + dinv[j, a, b] * r[b]
        x[j, a] = s


def block_sgs(const double[:, :, ::1] dinv,
              const double[:, :, ::1] off,
              const cnp.int64_t[::1] ptr,
              const cnp.int64_t[::1] nbr,
              const cnp.int64_t[::1] blk,
              const double[:, ::1] rhs,
              double[:, ::1] x,
              int sweeps):
    """In-place symmetric block Gauss-Seidel on ``x``.

    Row ``j`` couples to ``nbr[ptr[j]:ptr[j+1]]`` through blocks
    ``off[blk[...]]``; ``dinv`` holds the inverted diagonal blocks.
    """
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t j
    cdef int it
    with nogil:
        for it in range(sweeps):
            for j in range(n):
                _relax(j, dinv, off, ptr, nbr, blk, rhs, x)
            for j in range(n - 1, -1, -1):
                _relax(j, dinv, off, ptr, nbr, blk, rhs, x)


def block_matvec(const double[:, :, ::1] diag,
                 const double[:, :, ::1] off,
                 const cnp.int64_t[::1] ptr,
                 const cnp.int64_t[::1] nbr,
                 const cnp.int64_t[::1] blk,
                 const double[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0]
    out_arr = np.zeros((n, 5))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t j, p, k, e, a, b
    cdef double s
    with nogil:
        for j in range(n):
            for a in range(5):
                s = 0.0
                for b in range(5):
                    s = s + diag[j, a, b] * x[j, b]
                for p in range(ptr[j], ptr[j + 1]):
                    k = nbr[p]
                    e = blk[p]
                    for b in range(5):
                        s = s + off[e, a, b] * x[k, b]
                out[j, a] = s
    return out_arr
