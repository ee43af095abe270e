"""Quadratic least-squares nodal gradients.

Each node fits ``f_m - f_j`` over its stencil with the nine monomials
``dx, dy, dz, dx^2/2, dy^2/2, dz^2/2, dx dy, dy dz, dz dx`` and keeps the
linear coefficients.  Offsets are scaled per axis by the stencil extent
before the fit, which keeps the 1000:1 boxes well conditioned.  The result
is stored as three sparse operators so that applying the gradient to any
number of nodal fields is a sparse product.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import MeshTopology

__all__ = ["GradientStencil", "StencilError", "build_stencils", "compute_gradients"]

N_UNKNOWNS = 9


class StencilError(ValueError):
    """Rank-deficient least-squares stencil."""


@dataclass
class GradientStencil:
    """Per-node stencils and the gradient operators built on them.

    ``members`` is CSR-like (``ptr``, ``members``).  ``operators[d]`` maps a
    nodal field to its ``d``-derivative.  ``condition`` is the 2-norm
    condition number of each scaled, weighted normal matrix.
    """

    ptr: np.ndarray
    members: np.ndarray
    operators: tuple
    condition: np.ndarray

    def stencil(self, j: int) -> np.ndarray:
        return self.members[self.ptr[j] : self.ptr[j + 1]]

    @property
    def sizes(self) -> np.ndarray:
        return np.diff(self.ptr)


def _adjacency(mesh: MeshTopology) -> sp.csr_matrix:
    n = mesh.n_nodes
    e = mesh.edges
    return sp.coo_matrix(
        (np.ones(2 * len(e)), (np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]])), shape=(n, n)
    ).tocsr()


def _stencil_graph(adj: sp.csr_matrix, level: np.ndarray) -> sp.csr_matrix:
    """Row j holds the nodes within ``level[j]`` edge hops of j (j excluded)."""
    adj.shape[0]
    reach = adj.copy()
    power = adj
    for lev in range(2, int(level.max()) + 1):
        rows = (level >= lev).astype(float)
        power = (sp.diags(rows) @ power @ adj).tocsr()
        reach = reach + power
    reach = reach.tocsr()
    reach.setdiag(0)
    reach.eliminate_zeros()
    reach.data[:] = 1.0
    reach.sort_indices()
    return reach


def _fit(x, nodes, pad, valid):
    d = x[pad] - x[nodes][:, None, :]
    scale = np.abs(d).max(axis=1)
    # a flat stencil leaves a zero column below, which the condition check catches
    scale = np.where(scale > 0.0, scale, 1.0)
    X = d / scale[:, None, :]
    A = np.concatenate(
        [
            X,
            0.5 * X**2,
            X[..., [0]] * X[..., [1]],
            X[..., [1]] * X[..., [2]],
            X[..., [2]] * X[..., [0]],
        ],
        axis=-1,
    )
    dist = np.linalg.norm(X, axis=-1)
    wgt = np.where(valid, 1.0 / np.where(dist > 0, dist, 1.0), 0.0)
    WA = wgt[..., None] * A
    sv = np.linalg.svd(WA, compute_uv=False)
    with np.errstate(divide="ignore"):
        cond = (sv[:, 0] / sv[:, -1]) ** 2
    P = np.linalg.pinv(WA) * wgt[:, None, :]
    return np.transpose(P[:, :3, :], (0, 2, 1)) / scale[:, None, :], cond


def build_stencils(mesh: MeshTopology, min_size: int = 20, max_condition: float = 1e10,
                   max_level: int = 3, chunk: int = 8192) -> GradientStencil:
    """Least-squares stencils: edge neighbours, widened ring by ring for nodes
    with fewer than ``min_size`` members or an ill-conditioned fit."""
    adj = _adjacency(mesh)
    n = mesh.n_nodes
    x = mesh.node_coords
    level = np.where(np.diff(adj.indptr) < min_size, 2, 1)
    todo = np.arange(n)
    coef_rows = {}
    while True:
        graph = _stencil_graph(adj, level)
        ptr = graph.indptr.astype(np.int64)
        sizes = np.diff(ptr)
        width = int(sizes[todo].max())
        bad = []
        for s in range(0, len(todo), chunk):
            nodes = todo[s : s + chunk]
            cnt = sizes[nodes]
            valid = np.arange(width)[None, :] < cnt[:, None]
            pad = np.repeat(nodes[:, None], width, axis=1)
            pad[valid] = np.concatenate([graph.indices[ptr[j] : ptr[j + 1]] for j in nodes])
            coef, cond = _fit(x, nodes, pad, valid)
            ok = np.isfinite(cond) & (cond <= max_condition) & (cnt >= N_UNKNOWNS)
            for i, j in enumerate(nodes):
                coef_rows[j] = (coef[i, : cnt[i]], cond[i])
            bad.append(nodes[~ok])
        bad = np.concatenate(bad)
        if len(bad) == 0:
            break
        if np.any(level[bad] >= max_level):
            j = int(bad[np.argmax(level[bad])])
            raise StencilError(f"rank-deficient least-squares stencil at node {j}")
        level[bad] += 1
        todo = bad

    members = graph.indices.astype(np.int64)
    vals = np.concatenate([coef_rows[j][0] for j in range(n)])
    cond = np.array([coef_rows[j][1] for j in range(n)])
    ops = []
    for dim in range(3):
        c = vals[:, dim]
        A = sp.csr_matrix((c, members, ptr), shape=(n, n))
        A = A - sp.diags(np.asarray(A.sum(axis=1)).ravel())
        ops.append(A.tocsr())
    return GradientStencil(ptr, members, tuple(ops), cond)


def compute_gradients(stencil: GradientStencil, values: np.ndarray) -> np.ndarray:
    """Gradients of nodal fields.

    ``values`` has shape ``(N,)`` or ``(N, m)``; the result appends a trailing
    axis of length 3, e.g. ``(N, m, 3)``.
    """
    values = np.asarray(values, dtype=float)
    return np.stack([op @ values for op in stencil.operators], axis=-1)
