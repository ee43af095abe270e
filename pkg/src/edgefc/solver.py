"""Implicit defect-correction solver in pseudo time.

Each nonlinear iteration solves

    [V_j/dtau_j I + dR1/du] du = -R(u)

where ``R`` is the target (high-order) residual and ``dR1/du`` the Jacobian
of the first-order edge scheme ``Phi(u_j, u_k)``.  By default it uses the Roe
matrix frozen, ``dPhi/du_j = (A_j + |A_roe|)/2`` and
``dPhi/du_k = (A_k - |A_roe|)/2``; for LDFSS the flux is differentiated
numerically instead (see :class:`DefectCorrectionJacobian`).  Boundary
terms enter the diagonal only, and the blocks are refreshed every
``jacobian_interval`` iterations.  The local pseudo time step is

    V_j/dtau_j = (1/CFL) * sum_faces (|q_n| + a) |n|

over the node's edges and its boundary-face share.  The linear system is
relaxed by symmetric block Gauss-Seidel sweeps.
"""
from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import kernels
from .euler import (
    GasModel,
    NonPhysicalStateError,
    cons_to_prim,
    flux_jacobian_primitive,
    prim_to_cons,
    sound_speed,
)
from .fluxes import get_flux, roe_abs_jacobian
from .residual import Discretization, SchemeConfig, assemble_residual, boundary_closure

__all__ = [
    "SolverConfig",
    "SolveReport",
    "initialize_states",
    "first_order_residual",
    "residual_floor",
    "DefectCorrectionJacobian",
    "solve",
]

log = logging.getLogger(__name__)

# residual floor relative to an O(1) flux through the mean nodal dual surface,
# so trivially converged cases stop regardless of grid scale
FLOOR = 1e-13
LINEARIZATIONS = ("auto", "roe", "flux")


@dataclass(frozen=True)
class SolverConfig:
    cfl_start: float = 10.0
    cfl_max: float = 1e5
    cfl_growth: float = 1.5
    max_nonlinear_iters: int = 300
    linear_sweeps: int = 8
    jacobian_interval: int = 3
    linearization: str = "auto"
    convergence_drop: float = 6.0
    init_perturbation: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not self.convergence_drop > 0:
            raise ValueError("convergence_drop must be positive")
        if min(self.cfl_start, self.cfl_max) <= 0 or self.cfl_growth < 1.0:
            raise ValueError("CFL controls must be positive (growth >= 1)")
        if self.linearization not in LINEARIZATIONS:
            raise ValueError(f"unknown linearization {self.linearization!r}")
        if self.jacobian_interval < 1:
            raise ValueError("jacobian_interval must be at least 1")


@dataclass
class SolveReport:
    history: list = field(default_factory=list)  # per-iteration L1 norms (5,)
    cfl: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    rejected: int = 0
    wall_time: float = 0.0
    w: np.ndarray | None = None

    @property
    def initial(self) -> np.ndarray:
        return self.history[0]

    @property
    def drop(self) -> np.ndarray:
        """Orders of magnitude gained per equation."""
        return np.log10(self.history[0] / np.maximum(self.history[-1], 1e-300))

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["iter", "l1_rho", "l1_rhou", "l1_rhov", "l1_rhow", "l1_rhoE", "cfl"])
            for it, (norms, cfl) in enumerate(zip(self.history, self.cfl)):
                out.writerow([it, *(f"{v:.10e}" for v in norms), f"{cfl:.6g}"])


def initialize_states(disc: Discretization, config: SolverConfig) -> np.ndarray:
    """Exact nodal solution times ``1 + eps`` with ``eps`` uniform in +-init_perturbation."""
    rng = np.random.default_rng(config.seed)
    exact = disc.w_exact
    eps = config.init_perturbation
    w = exact * (1.0 + rng.uniform(-eps, eps, size=exact.shape))
    bad = (w[:, 0] <= 0) | (w[:, 4] <= 0)
    while np.any(bad):
        w[bad] = exact[bad] * (1.0 + rng.uniform(-eps, eps, size=(int(bad.sum()), 5)))
        bad = (w[:, 0] <= 0) | (w[:, 4] <= 0)
    return w


def _dwdu(w, gas):
    """``d(primitive)/d(conservative)``, shape ``(..., 5, 5)``."""
    rho, vel = w[..., 0], w[..., 1:4]
    M = np.zeros(w.shape[:-1] + (5, 5))
    M[..., 0, 0] = 1.0
    M[..., 1:4, 0] = -vel / rho[..., None]
    M[..., 1:4, 1:4] = np.eye(3) / rho[..., None, None]
    g1 = gas.gamma - 1.0
    M[..., 4, 0] = g1 * 0.5 * np.sum(vel * vel, axis=-1)
    M[..., 4, 1:4] = -g1 * vel
    M[..., 4, 4] = g1
    return M


def _cons_jacobian(w, n_hat, gas):
    return flux_jacobian_primitive(w, n_hat, gas) @ _dwdu(w, gas)


def first_order_residual(disc: Discretization, w: np.ndarray, flux: str = "roe") -> np.ndarray:
    """Residual of the first-order scheme (no source), for Jacobian checks."""
    flux_fn = get_flux(flux)
    phi = flux_fn(w[disc.j], w[disc.k], disc.n_hat, disc.gas)
    res = disc.scatter(phi * disc.area[:, None])
    res += boundary_closure(
        disc.mesh.boundary_tris, disc.metrics.tri_area_vector, disc.mesh.node_coords, w,
        disc.w_exact, flux_fn, disc.gas, "lumped", n_nodes=disc.n_nodes,
    )
    return res


def _fd_flux_jacobians(flux, wl, wr, n_hat, gas, rel=1e-7):
    """``dPhi/du_L`` and ``dPhi/du_R`` by central differences in conservative variables."""
    ul, ur = prim_to_cons(wl, gas), prim_to_cons(wr, gas)
    out = []
    for u, other, left in ((ul, wr, True), (ur, wl, False)):
        J = np.empty(u.shape + (5,))
        for c in range(5):
            eps = rel * np.maximum(np.abs(u[:, c]), 1.0)
            up, um = u.copy(), u.copy()
            up[:, c] += eps
            um[:, c] -= eps
            wp, wm = cons_to_prim(up, gas), cons_to_prim(um, gas)
            if left:
                d = flux(wp, other, n_hat, gas) - flux(wm, other, n_hat, gas)
            else:
                d = flux(other, wp, n_hat, gas) - flux(other, wm, n_hat, gas)
            J[:, :, c] = d / (2.0 * eps[:, None])
        out.append(J)
    return out


class DefectCorrectionJacobian:
    """First-order Jacobian blocks plus the pseudo-time diagonal.

    ``linearization="roe"`` uses the analytic Roe blocks
    ``(A_j +- |A_roe|)/2`` whatever the target flux; ``"flux"`` differentiates
    the target flux itself numerically.  ``"auto"`` picks ``"flux"`` for
    LDFSS, whose dissipation differs most from Roe's, and ``"roe"`` otherwise.
    """

    def __init__(self, disc: Discretization, flux: str = "roe", linearization: str = "auto"):
        if linearization not in LINEARIZATIONS:
            raise ValueError(f"unknown linearization {linearization!r}")
        self.flux = get_flux(flux)
        if linearization == "auto":
            linearization = "flux" if flux == "ldfss" else "roe"
        self.linearization = linearization
        self.disc = disc
        mesh = disc.mesh
        n_edges = len(mesh.edges)
        self.ptr = mesh.adj_ptr
        first = mesh.adj_sign > 0
        self.nbr = np.where(first, mesh.edges[mesh.adj_edge, 1], mesh.edges[mesh.adj_edge, 0])
        self.blk = np.where(first, mesh.adj_edge, mesh.adj_edge + n_edges).astype(np.int64)
        n = mesh.n_nodes
        ar = np.arange(n_edges)
        self._to_j = sp.csr_matrix((np.ones(n_edges), (disc.j, ar)), shape=(n, n_edges))
        self._to_k = sp.csr_matrix((np.ones(n_edges), (disc.k, ar)), shape=(n, n_edges))
        tris = mesh.boundary_tris
        area = disc.metrics.tri_area / 3.0
        self._tri_node = tris.ravel()
        self._tri_area = np.repeat(area, 3)
        self._tri_normal = np.repeat(
            disc.metrics.tri_area_vector / disc.metrics.tri_area[:, None], 3, axis=0
        )
        self._to_node = sp.csr_matrix(
            (np.ones(len(self._tri_node)), (self._tri_node, np.arange(len(self._tri_node)))),
            shape=(n, len(self._tri_node)),
        )

    def update(self, w: np.ndarray) -> None:
        """Linearise about primitive states ``w``."""
        disc = self.disc
        gas = disc.gas
        n = disc.n_nodes
        wj, wk = w[disc.j], w[disc.k]
        area = disc.area[:, None, None]
        if self.linearization == "roe":
            Aj = _cons_jacobian(wj, disc.n_hat, gas)
            Ak = _cons_jacobian(wk, disc.n_hat, gas)
            absA = roe_abs_jacobian(wj, wk, disc.n_hat, gas)
            Pj = 0.5 * (Aj + absA) * area
            Pk = 0.5 * (Ak - absA) * area
        else:
            Pj, Pk = _fd_flux_jacobians(self.flux, wj, wk, disc.n_hat, gas)
            Pj *= area
            Pk *= area
        self.off = np.ascontiguousarray(np.concatenate([Pk, -Pj]))
        diag = (self._to_j @ Pj.reshape(-1, 25) - self._to_k @ Pk.reshape(-1, 25)).reshape(n, 5, 5)

        wb = w[self._tri_node]
        wex = disc.w_exact[self._tri_node]
        if self.linearization == "roe":
            Ab = _cons_jacobian(wb, self._tri_normal, gas)
            absAb = roe_abs_jacobian(wb, wex, self._tri_normal, gas)
            Pb = 0.5 * (Ab + absAb)
        else:
            Pb = _fd_flux_jacobians(self.flux, wb, wex, self._tri_normal, gas)[0]
        Pb = Pb * self._tri_area[:, None, None]
        diag += (self._to_node @ Pb.reshape(-1, 25)).reshape(n, 5, 5)
        self.diag = diag

        # spectral radii for the local pseudo time step
        wm = 0.5 * (wj + wk)
        lam = (np.abs(np.sum(wm[:, 1:4] * disc.n_hat, axis=1)) + sound_speed(wm, gas)) * disc.area
        lamb = (
            np.abs(np.sum(wb[:, 1:4] * self._tri_normal, axis=1)) + sound_speed(wb, gas)
        ) * self._tri_area
        self.radius = self._to_j @ lam + self._to_k @ lam + self._to_node @ lamb

    def matrix_diag(self, cfl: float | None) -> np.ndarray:
        if cfl is None:
            return self.diag
        return self.diag + (self.radius / cfl)[:, None, None] * np.eye(5)

    def matvec(self, du: np.ndarray, cfl: float | None = None) -> np.ndarray:
        return kernels.block_matvec(
            np.ascontiguousarray(self.matrix_diag(cfl)), self.off, self.ptr, self.nbr,
            self.blk, np.ascontiguousarray(du),
        )

    def solve(self, rhs: np.ndarray, cfl: float, sweeps: int) -> np.ndarray:
        dinv = np.ascontiguousarray(np.linalg.inv(self.matrix_diag(cfl)))
        du = np.zeros_like(rhs)
        kernels.block_sgs(
            dinv, self.off, self.ptr, self.nbr, self.blk, np.ascontiguousarray(rhs), du, sweeps
        )
        return du


def residual_floor(disc: Discretization) -> float:
    """``FLOOR`` times the mean over nodes of the summed dual-face areas."""
    faces = 2.0 * disc.area.sum() + disc.metrics.tri_area.sum()
    return FLOOR * faces / disc.n_nodes


def _converged(norms, target):
    return bool(np.all(norms <= target))


def solve(disc: Discretization, scheme: SchemeConfig, config: SolverConfig = SolverConfig(),
          w0: np.ndarray | None = None, history_csv=None) -> SolveReport:
    """Drive the ``scheme`` residual to steady state.

    Non-convergence is reported through ``SolveReport.converged``, not raised.
    """
    t0 = time.perf_counter()
    gas: GasModel = disc.gas
    w = initialize_states(disc, config) if w0 is None else np.array(w0, dtype=float)
    report = SolveReport()
    res = assemble_residual(disc, w, scheme).res
    norms = np.mean(np.abs(res), axis=0)
    report.history.append(norms)
    cfl = config.cfl_start
    report.cfl.append(cfl)
    target = np.maximum(norms * 10.0 ** (-config.convergence_drop), residual_floor(disc))

    jac = DefectCorrectionJacobian(disc, scheme.flux, config.linearization)
    rejected_at_update = 0
    it = 0
    while not _converged(norms, target) and it < config.max_nonlinear_iters:
        if it % config.jacobian_interval == 0 or report.rejected > rejected_at_update:
            jac.update(w)
            rejected_at_update = report.rejected
        u = prim_to_cons(w, gas)
        while True:
            du = jac.solve(-res, cfl, config.linear_sweeps)
            w_new = cons_to_prim(u + du, gas, check=False)
            try:
                if not np.all((w_new[:, 0] > 0) & (w_new[:, 4] > 0)):
                    raise NonPhysicalStateError("update produced a non-physical state")
                res_new = assemble_residual(disc, w_new, scheme).res
            except NonPhysicalStateError:
                report.rejected += 1
                cfl *= 0.5
                log.debug("iteration %d rejected, CFL -> %g", it, cfl)
                if cfl < 1e-8:
                    report.w = w
                    report.iterations = it
                    report.wall_time = time.perf_counter() - t0
                    return report
                continue
            break
        w, res = w_new, res_new
        norms = np.mean(np.abs(res), axis=0)
        it += 1
        cfl = min(cfl * config.cfl_growth, config.cfl_max)
        report.history.append(norms)
        report.cfl.append(cfl)
        log.debug("iter %4d  L1 %s  CFL %.3g", it, np.array2string(norms, precision=3), cfl)

    report.converged = _converged(norms, target)
    report.iterations = it
    report.w = w
    report.wall_time = time.perf_counter() - t0
    if history_csv is not None:
        report.write_csv(history_csv)
    return report
