"""Edge-based third-order finite-volume schemes for the Euler equations on
irregular tetrahedral grids, with a manufactured-solution verification
driver."""
from .euler import GasModel, NonPhysicalStateError, cons_to_prim, prim_to_cons
from .fluxes import FLUXES, flux_hllc, flux_ldfss, flux_roe, get_flux
from .gradients import build_stencils, compute_gradients
from .kernels import available_backends, get_backend, set_backend
from .mesh import GridSpec, compute_dual_metrics, generate_tet_grid, read_mesh, write_mesh
from .mms import MMSField, exact_primitive, forcing
from .residual import Discretization, SchemeConfig, assemble_residual
from .solver import SolverConfig, solve
from .verify import StudySpec, compute_l1_error, observed_order, run_study

__version__ = "0.1.0"

__all__ = [
    "GasModel", "NonPhysicalStateError", "cons_to_prim", "prim_to_cons",
    "FLUXES", "flux_hllc", "flux_ldfss", "flux_roe", "get_flux",
    "build_stencils", "compute_gradients",
    "available_backends", "get_backend", "set_backend",
    "GridSpec", "compute_dual_metrics", "generate_tet_grid", "read_mesh", "write_mesh",
    "MMSField", "exact_primitive", "forcing",
    "Discretization", "SchemeConfig", "assemble_residual",
    "SolverConfig", "solve",
    "StudySpec", "compute_l1_error", "observed_order", "run_study",
]
