"""Hot kernels with a compiled core and a pure-Python fallback.

The compiled module ``edgefc._kernels`` is used when it was built; otherwise
the scipy-based fallbacks below are selected at import.  Both produce the
same iterates up to rounding.  :func:`set_backend` switches explicitly.

Block system layout shared by both backends: ``x`` and ``rhs`` are
``(N, 5)``; row ``j`` couples to nodes ``nbr[ptr[j]:ptr[j+1]]`` through the
5x5 blocks ``off[blk[ptr[j]:ptr[j+1]]]``; ``diag``/``dinv`` are ``(N, 5, 5)``.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve_triangular

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

__all__ = ["available_backends", "get_backend", "set_backend", "block_sgs", "block_matvec"]

_backend = "compiled" if _compiled is not None else "python"


def available_backends() -> tuple:
    return ("compiled", "python") if _compiled is not None else ("python",)


def get_backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in available_backends():
        raise ValueError(f"backend {name!r} unavailable; have {available_backends()}")
    _backend = name


def _block_csr(blocks, rows, cols, n):
    """Scalar CSR matrix of size 5n assembled from 5x5 blocks."""
    r = (5 * rows[:, None, None] + np.arange(5)[None, :, None]).repeat(5, axis=2)
    c = (5 * cols[:, None, None] + np.arange(5)[None, None, :]).repeat(5, axis=1)
    return sp.csr_matrix((blocks.ravel(), (r.ravel(), c.ravel())), shape=(5 * n, 5 * n))


def _py_block_sgs(dinv, off, ptr, nbr, blk, rhs, x, sweeps):
    n = len(x)
    row = np.repeat(np.arange(n), np.diff(ptr))
    scaled = np.einsum("pab,pbc->pac", dinv[row], off[blk])
    lower = nbr < row
    eye = sp.identity(5 * n, format="csr")
    L = _block_csr(scaled[lower], row[lower], nbr[lower], n)
    U = _block_csr(scaled[~lower], row[~lower], nbr[~lower], n)
    lo_sys = (eye + L).tocsr()
    up_sys = (eye + U).tocsr()
    b = np.einsum("jab,jb->ja", dinv, rhs).ravel()
    xv = x.ravel().copy()
    for _ in range(sweeps):
        xv = spsolve_triangular(lo_sys, b - U @ xv, lower=True, unit_diagonal=True)
        xv = spsolve_triangular(up_sys, b - L @ xv, lower=False, unit_diagonal=True)
    x[...] = xv.reshape(n, 5)


def _py_block_matvec(diag, off, ptr, nbr, blk, x):
    n = len(x)
    row = np.repeat(np.arange(n), np.diff(ptr))
    out = np.einsum("jab,jb->ja", diag, x)
    prod = np.einsum("pab,pb->pa", off[blk], x[nbr])
    for a in range(5):
        out[:, a] += np.bincount(row, prod[:, a], n)
    return out


def block_sgs(dinv, off, ptr, nbr, blk, rhs, x, sweeps: int) -> None:
    """``sweeps`` forward+backward block Gauss-Seidel passes, updating ``x`` in place."""
    if _backend == "compiled":
        _compiled.block_sgs(dinv, off, ptr, nbr, blk, rhs, x, int(sweeps))
    else:
        _py_block_sgs(dinv, off, ptr, nbr, blk, rhs, x, int(sweeps))


def block_matvec(diag, off, ptr, nbr, blk, x) -> np.ndarray:
    if _backend == "compiled":
        return _compiled.block_matvec(diag, off, ptr, nbr, blk, x)
    return _py_block_matvec(diag, off, ptr, nbr, blk, x)
