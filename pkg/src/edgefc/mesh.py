"""Irregular tetrahedral grids on a box and their median-dual metrics.

Nodes of an ``n x n x n`` lattice are numbered ``(i*n + j)*n + k`` with the
z-index fastest.  Every hexahedral cell is cut into six tetrahedra by a
rule that depends only on a random global ranking of the nodes (each face is
split by the diagonal through its lowest-ranked vertex, and the cell is
coned from its lowest-ranked vertex), so neighbouring cells always agree on
shared faces while the diagonal directions vary from cell to cell.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "GridSpec",
    "MeshTopology",
    "DualMetrics",
    "MeshError",
    "generate_tet_grid",
    "compute_dual_metrics",
    "tet_volumes",
    "write_mesh",
    "read_mesh",
]

# local edges of a positively oriented tet (a, b, c, d), listed so that
# (a, b, c, d) is an even permutation of (0, 1, 2, 3)
_TET_EDGES = np.array(
    [[0, 1, 2, 3], [0, 2, 3, 1], [0, 3, 1, 2], [1, 2, 0, 3], [1, 3, 2, 0], [2, 3, 0, 1]]
)

# hex corner offsets (di, dj, dk) indexed by bit pattern di + 2*dj + 4*dk
_CORNERS = np.array([[c & 1, (c >> 1) & 1, (c >> 2) & 1] for c in range(8)])

# the six quad faces of a hex, as corner bit patterns in cyclic order
_HEX_FACES = np.array(
    [
        [0, 2, 6, 4],  # x = 0
        [1, 3, 7, 5],  # x = 1
        [0, 1, 5, 4],  # y = 0
        [2, 3, 7, 6],  # y = 1
        [0, 1, 3, 2],  # z = 0
        [4, 5, 7, 6],  # z = 1
    ]
)


class MeshError(ValueError):
    """Invalid grid specification or degenerate geometry."""


@dataclass(frozen=True)
class GridSpec:
    n: int
    domain: tuple = ((0.0, 1.0), (0.0, 1.0), (0.0, 0.001))
    perturbation_fraction: float = 0.25
    seed: int = 0
    random_split: bool = True

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise MeshError(f"need n >= 2 nodes per direction, got {self.n}")
        if not 0.0 <= self.perturbation_fraction < 0.5:
            raise MeshError("perturbation_fraction must lie in [0, 0.5)")
        lo, hi = self.bounds
        if np.any(hi - lo <= 0.0):
            raise MeshError(f"domain extents must be positive: {self.domain}")

    @property
    def bounds(self):
        d = np.asarray(self.domain, dtype=float)
        return d[:, 0], d[:, 1]

    @property
    def volume(self) -> float:
        lo, hi = self.bounds
        return float(np.prod(hi - lo))


@dataclass
class MeshTopology:
    """Node coordinates and connectivity.

    ``edges`` holds each unordered pair once as ``(j, k)`` with ``j < k``.
    ``boundary_tris`` are wound so that their right-hand normal points out of
    the domain; ``boundary_tags`` gives the box face (0..5 for x-, x+, y-,
    y+, z-, z+) of each triangle.  The node-edge adjacency is a CSR structure
    (``adj_ptr``, ``adj_edge``, ``adj_sign``) with sign +1 when the node is the
    first vertex of the edge.
    """

    node_coords: np.ndarray
    tets: np.ndarray
    boundary_tris: np.ndarray
    boundary_tags: np.ndarray
    edges: np.ndarray = field(init=False)
    adj_ptr: np.ndarray = field(init=False)
    adj_edge: np.ndarray = field(init=False)
    adj_sign: np.ndarray = field(init=False)
    tet_edge: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.node_coords = np.ascontiguousarray(self.node_coords, dtype=float)
        self.tets = np.ascontiguousarray(self.tets, dtype=np.int64)
        self.boundary_tris = np.ascontiguousarray(self.boundary_tris, dtype=np.int64)
        self.boundary_tags = np.asarray(self.boundary_tags, dtype=np.int64)
        n_nodes = len(self.node_coords)

        a = self.tets[:, _TET_EDGES[:, 0]]
        b = self.tets[:, _TET_EDGES[:, 1]]
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        keys = lo.astype(np.int64) * n_nodes + hi
        uniq, inverse = np.unique(keys.ravel(), return_inverse=True)
        self.edges = np.stack([uniq // n_nodes, uniq % n_nodes], axis=1)
        # signed global edge id for each local tet edge (+1 if a < b)
        self.tet_edge = inverse.reshape(keys.shape)
        self._tet_edge_sign = np.where(a < b, 1.0, -1.0)

        ends = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        ids = np.concatenate([np.arange(len(self.edges))] * 2)
        signs = np.concatenate([np.ones(len(self.edges)), -np.ones(len(self.edges))])
        order = np.lexsort((ids, ends))
        self.adj_edge = ids[order]
        self.adj_sign = signs[order]
        self.adj_ptr = np.zeros(n_nodes + 1, dtype=np.int64)
        np.cumsum(np.bincount(ends, minlength=n_nodes), out=self.adj_ptr[1:])

    @property
    def n_nodes(self) -> int:
        return len(self.node_coords)

    @property
    def boundary_nodes(self) -> np.ndarray:
        return np.unique(self.boundary_tris)

    def neighbors(self, j: int) -> np.ndarray:
        s = slice(self.adj_ptr[j], self.adj_ptr[j + 1])
        e = self.edges[self.adj_edge[s]]
        return np.where(self.adj_sign[s] > 0, e[:, 1], e[:, 0])

    def edge_lengths(self) -> np.ndarray:
        d = self.node_coords[self.edges[:, 1]] - self.node_coords[self.edges[:, 0]]
        return np.linalg.norm(d, axis=1)


@dataclass
class DualMetrics:
    """Median-dual metrics.

    edge_directed_area : (E, 3) lumped directed area, oriented edge[0] -> edge[1]
    edge_area_mag      : (E,)
    dual_volume        : (N,)
    tri_area_vector    : (B, 3) outward area vector of each boundary triangle
    boundary_closure   : (N, 3) sum over incident boundary triangles of area/3
    """

    edge_directed_area: np.ndarray
    edge_area_mag: np.ndarray
    dual_volume: np.ndarray
    tri_area_vector: np.ndarray
    boundary_closure: np.ndarray

    @property
    def edge_unit_normal(self) -> np.ndarray:
        return self.edge_directed_area / self.edge_area_mag[:, None]

    @property
    def tri_area(self) -> np.ndarray:
        return np.linalg.norm(self.tri_area_vector, axis=1)

    def boundary_node_faces(self, mesh: MeshTopology, j: int):
        """Incident boundary triangles of node ``j`` as (index, area, unit normal)."""
        idx = np.nonzero(np.any(mesh.boundary_tris == j, axis=1))[0]
        area = self.tri_area[idx]
        return idx, area, self.tri_area_vector[idx] / area[:, None]


def tet_volumes(coords: np.ndarray, tets: np.ndarray) -> np.ndarray:
    p = coords[tets]
    return np.einsum(
        "ij,ij->i", p[:, 1] - p[:, 0], np.cross(p[:, 2] - p[:, 0], p[:, 3] - p[:, 0])
    ) / 6.0


def _lattice(spec: GridSpec):
    n = spec.n
    lo, hi = spec.bounds
    h = (hi - lo) / (n - 1)
    idx = np.stack(
        np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij"), axis=-1
    ).reshape(-1, 3)
    return lo + idx * h, idx, h


def _draw_shift(rng, idx, n, h, frac, scale=1.0):
    shift = rng.uniform(-1.0, 1.0, size=idx.shape) * (frac * scale) * h
    # a coordinate on a boundary plane stays on it; edge and corner nodes
    # are pinned completely
    on_plane = (idx == 0) | (idx == n - 1)
    shift[on_plane] = 0.0
    shift[on_plane.sum(axis=1) >= 2] = 0.0
    return shift


def generate_tet_grid(spec: GridSpec, min_volume_ratio: float = 0.1,
                      max_redraws: int = 50) -> MeshTopology:
    """Perturbed-lattice tetrahedral grid.

    Node offsets that leave an incident tet with less than
    ``min_volume_ratio`` of its lattice volume are redrawn (at half amplitude
    after ten attempts), so every fraction below 0.5 yields a valid grid.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    base, idx, h = _lattice(spec)
    frac = spec.perturbation_fraction
    shift = _draw_shift(rng, idx, n, h, frac)
    rank = rng.permutation(n**3) if spec.random_split else np.arange(n**3)

    c = np.arange(n - 1)
    ci, cj, ck = (a.ravel() for a in np.meshgrid(c, c, c, indexing="ij"))
    corner = ((ci[:, None] + _CORNERS[:, 0]) * n + cj[:, None] + _CORNERS[:, 1]) * n + (
        ck[:, None] + _CORNERS[:, 2]
    )  # (H, 8) global node ids
    crank = rank[corner]
    apex = np.argmin(crank, axis=1)  # corner bit pattern of the cone apex
    rows = np.arange(len(corner))

    tets = []
    for f, quad in enumerate(_HEX_FACES):
        axis, side = divmod(f, 2)
        # faces not touching the apex get coned; the apex lies on the opposite side
        far = ((apex >> axis) & 1) != side
        q = corner[:, quad]
        qr = crank[:, quad]
        s = np.argmin(qr, axis=1)
        v0 = q[rows, s]
        v1 = q[rows, (s + 1) % 4]
        v2 = q[rows, (s + 2) % 4]
        v3 = q[rows, (s + 3) % 4]
        top = corner[rows, apex]
        for tri in ((v0, v1, v2), (v0, v2, v3)):
            tets.append(np.stack([top, *tri], axis=1)[far])
    tets = np.concatenate(tets)

    # orient on the unperturbed lattice so that an inverted element is caught,
    # not silently flipped
    nominal = tet_volumes(base, tets)
    flip = nominal < 0
    tets[flip] = tets[flip][:, [0, 2, 1, 3]]
    nominal = np.abs(nominal)

    for attempt in range(max_redraws):
        bad = tet_volumes(base + shift, tets) < min_volume_ratio * nominal
        if not np.any(bad):
            break
        nodes = np.unique(tets[bad])
        scale = 1.0 if attempt < 10 else 0.5 ** (attempt - 9)
        shift[nodes] = _draw_shift(rng, idx[nodes], n, h, frac, scale)
    coords = base + shift

    tris, tags = _boundary_triangles(spec, corner, crank, base)
    mesh = MeshTopology(coords, tets, tris, tags)
    if np.any(tet_volumes(mesh.node_coords, mesh.tets) <= 0.0):
        raise MeshError("generated a tetrahedron with non-positive volume")
    return mesh


def _boundary_triangles(spec, corner, crank, coords):
    n = spec.n
    cell = np.arange(len(corner))
    ci, rem = np.divmod(cell, (n - 1) ** 2)
    cj, ck = np.divmod(rem, n - 1)
    cidx = np.stack([ci, cj, ck], axis=1)
    tris, tags = [], []
    for f, quad in enumerate(_HEX_FACES):
        axis, side = divmod(f, 2)
        sel = cidx[:, axis] == (0 if side == 0 else n - 2)
        q = corner[sel][:, quad]
        qr = crank[sel][:, quad]
        rows = np.arange(len(q))
        s = np.argmin(qr, axis=1)
        v = [q[rows, (s + m) % 4] for m in range(4)]
        t = np.concatenate([np.stack([v[0], v[1], v[2]], 1), np.stack([v[0], v[2], v[3]], 1)])
        p = coords[t]
        normal = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        outward = (1.0 if side else -1.0) * normal[:, axis]
        t[outward < 0] = t[outward < 0][:, [0, 2, 1]]
        tris.append(t)
        tags.append(np.full(len(t), f))
    return np.concatenate(tris), np.concatenate(tags)


def compute_dual_metrics(mesh: MeshTopology) -> DualMetrics:
    x = mesh.node_coords
    vol = tet_volumes(x, mesh.tets)
    if np.any(vol <= 0.0):
        bad = int(np.argmin(vol))
        raise MeshError(f"tetrahedron {bad} has non-positive volume {vol[bad]:.3e}")

    p = x[mesh.tets]  # (T, 4, 3)
    g = p.mean(axis=1)
    n_edges = len(mesh.edges)
    area = np.zeros((n_edges, 3))
    for le, (a, b, c, d) in enumerate(_TET_EDGES):
        m = 0.5 * (p[:, a] + p[:, b])
        fc = (p[:, a] + p[:, b] + p[:, c]) / 3.0
        fd = (p[:, a] + p[:, b] + p[:, d]) / 3.0
        # quad m -> fc -> g -> fd; equals the sum of the two dual triangles
        nab = 0.5 * np.cross(g - m, fd - fc) * mesh._tet_edge_sign[:, le, None]
        for comp in range(3):
            area[:, comp] += np.bincount(
                mesh.tet_edge[:, le], weights=nab[:, comp], minlength=n_edges
            )

    dual_volume = np.bincount(
        mesh.tets.ravel(), weights=np.repeat(vol / 4.0, 4), minlength=mesh.n_nodes
    )

    q = x[mesh.boundary_tris]
    tri_vec = 0.5 * np.cross(q[:, 1] - q[:, 0], q[:, 2] - q[:, 0])
    closure = np.zeros((mesh.n_nodes, 3))
    for comp in range(3):
        closure[:, comp] = np.bincount(
            mesh.boundary_tris.ravel(),
            weights=np.repeat(tri_vec[:, comp] / 3.0, 3),
            minlength=mesh.n_nodes,
        )
    mag = np.linalg.norm(area, axis=1)
    if np.any(mag == 0.0):
        raise MeshError("edge with zero lumped directed area")
    return DualMetrics(area, mag, dual_volume, tri_vec, closure)


# -- plain-text mesh exchange -------------------------------------------------
#
#   edgefc-mesh 1
#   <n_nodes> <n_tets> <n_boundary_tris>
#   x y z                       (n_nodes lines, 17 significant digits)
#   a b c d                     (n_tets lines, 1-based)
#   a b c tag                   (n_boundary_tris lines, 1-based, tag 0..5)

_MAGIC = "edgefc-mesh 1"


def write_mesh(mesh: MeshTopology, path) -> None:
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"{_MAGIC}\n{mesh.n_nodes} {len(mesh.tets)} {len(mesh.boundary_tris)}\n")
        np.savetxt(fh, mesh.node_coords, fmt="%.17g")
        np.savetxt(fh, mesh.tets + 1, fmt="%d")
        np.savetxt(
            fh, np.column_stack([mesh.boundary_tris + 1, mesh.boundary_tags]), fmt="%d"
        )


def read_mesh(path) -> MeshTopology:
    path = Path(path)
    with path.open() as fh:
        if fh.readline().strip() != _MAGIC:
            raise MeshError(f"{path}: not an edgefc mesh file")
        nn, nt, nb = (int(v) for v in fh.readline().split())
        coords = np.loadtxt(fh, max_rows=nn, ndmin=2)
        tets = np.loadtxt(fh, max_rows=nt, dtype=np.int64, ndmin=2) - 1
        bt = np.loadtxt(fh, max_rows=nb, dtype=np.int64, ndmin=2)
    return MeshTopology(coords, tets, bt[:, :3] - 1, bt[:, 3])
