"""Manufactured-solution grid-refinement studies.

A study runs every (scheme, flux) pair over a list of grid sizes, measures
the nodal L1 error of each primitive variable against the exact solution and
extracts observed orders between consecutive grids.  Grids are refined
consistently by regenerating the perturbed grid for each ``n`` from the same
seed.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .mesh import GridSpec, compute_dual_metrics, generate_tet_grid
from .mms import MMSField, exact_primitive
from .residual import Discretization, SchemeConfig
from .solver import SolverConfig, solve

__all__ = [
    "STUDY_MATRIX",
    "STUDY_DROP",
    "StudySpec",
    "RunRecord",
    "ConvergenceReport",
    "compute_l1_error",
    "observed_order",
    "run_case",
    "run_study",
]

log = logging.getLogger(__name__)

# (variant, flux) pairs of the reference experiment
STUDY_MATRIX = (
    ("second", "roe"),
    ("third_fr", "roe"),
    ("third_fc", "roe"),
    ("third_fc", "hllc"),
    ("third_fc", "ldfss"),
)

# a six-order drop leaves iteration error comparable to the third-order
# discretization error on the finer grids; ten orders keeps it negligible
STUDY_DROP = 10.0

CSV_COLUMNS = (
    "scheme", "flux", "n", "h", "err_rho", "err_u", "err_v", "err_w", "err_p",
    "order_u", "iters", "seconds",
)


def compute_l1_error(states: np.ndarray, mms: MMSField, coords: np.ndarray) -> np.ndarray:
    """Unweighted nodal L1 error ``mean_j |w_j - w_exact(x_j)|`` per variable."""
    return np.mean(np.abs(np.asarray(states) - exact_primitive(coords, mms)), axis=0)


def observed_order(e_coarse: float, e_fine: float, h_coarse: float, h_fine: float) -> float:
    if min(e_coarse, e_fine, h_coarse, h_fine) <= 0:
        raise ValueError("errors and spacings must be positive")
    return math.log(e_coarse / e_fine) / math.log(h_coarse / h_fine)


@dataclass(frozen=True)
class StudySpec:
    n_values: tuple = (16, 24, 32, 48)
    matrix: tuple = STUDY_MATRIX
    seed: int = 0
    perturbation: float = 0.25
    out_dir: Path | None = None
    solver: SolverConfig = field(default_factory=lambda: SolverConfig(convergence_drop=STUDY_DROP))
    kappa: float = 0.5

    def __post_init__(self):
        ns = tuple(int(n) for n in self.n_values)
        if len(ns) < 2 or any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError("n_values must be strictly increasing with at least two entries")
        object.__setattr__(self, "n_values", ns)
        # validate every scheme up front so a bad matrix fails before any solve
        for variant, flux in self.matrix:
            self.scheme(variant, flux)

    def scheme(self, variant: str, flux: str) -> SchemeConfig:
        kappa = 0.5 if SchemeConfig(variant, flux).variant == "third_fc" else self.kappa
        return SchemeConfig(variant, flux, kappa=kappa)


@dataclass
class RunRecord:
    scheme: str
    flux: str
    n: int
    h: float
    errors: np.ndarray
    iterations: int
    seconds: float
    converged: bool
    drop: np.ndarray
    order_u: float = float("nan")

    def row(self) -> list:
        order = "" if math.isnan(self.order_u) else f"{self.order_u:.4f}"
        return [
            self.scheme, self.flux, self.n, f"{self.h:.10g}",
            *(f"{e:.10e}" for e in self.errors), order, self.iterations, f"{self.seconds:.2f}",
        ]


@dataclass
class ConvergenceReport:
    spec: StudySpec
    runs: list = field(default_factory=list)

    @property
    def all_converged(self) -> bool:
        return all(r.converged for r in self.runs)

    def series(self, variant: str, flux: str) -> list:
        return [r for r in self.runs if (r.scheme, r.flux) == (variant, flux)]

    def finest_order(self, variant: str, flux: str) -> float:
        return self.series(variant, flux)[-1].order_u

    def header(self) -> list:
        s = self.spec
        return [
            f"# seed={s.seed} perturbation={s.perturbation} n={','.join(map(str, s.n_values))}",
            "# grids: fresh perturbation per n drawn from the study seed; h = 1/(n-1)",
        ]

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            for line in self.header():
                fh.write(line + "\n")
            out = csv.writer(fh)
            out.writerow(CSV_COLUMNS)
            for r in self.runs:
                out.writerow(r.row())

    def write_plot_data(self, path) -> None:
        """Whitespace columns ``h err_rho .. err_p`` per series, blocks split by
        two blank lines so gnuplot can address them with ``index``."""
        with Path(path).open("w") as fh:
            for line in self.header():
                fh.write(line + "\n")
            blocks = []
            for variant, flux in self.spec.matrix:
                lines = [f"# {self.spec.scheme(variant, flux).label}", "# h err_rho err_u err_v err_w err_p"]
                lines += [
                    f"{r.h:.10e} " + " ".join(f"{e:.10e}" for e in r.errors)
                    for r in self.series(variant, flux)
                ]
                blocks.append("\n".join(lines))
            fh.write("\n\n\n".join(blocks) + "\n")


def run_case(n: int, scheme: SchemeConfig, solver: SolverConfig = SolverConfig(),
             seed: int = 0, perturbation: float = 0.25, mms: MMSField = MMSField(),
             history_csv=None):
    """Build the grid for ``n``, solve, and return ``(RunRecord, SolveReport, disc)``."""
    mesh = generate_tet_grid(GridSpec(n, perturbation_fraction=perturbation, seed=seed))
    disc = Discretization(mesh, compute_dual_metrics(mesh), mms=mms)
    report = solve(disc, scheme, solver, history_csv=history_csv)
    errors = compute_l1_error(report.w, mms, mesh.node_coords)
    record = RunRecord(
        scheme=scheme.variant, flux=scheme.flux, n=n, h=1.0 / (n - 1), errors=errors,
        iterations=report.iterations, seconds=report.wall_time, converged=report.converged,
        drop=report.drop,
    )
    return record, report, disc


def run_study(spec: StudySpec) -> ConvergenceReport:
    """Run the full matrix; results are written to ``spec.out_dir`` as they arrive."""
    report = ConvergenceReport(spec)
    out = None
    if spec.out_dir is not None:
        out = Path(spec.out_dir)
        out.mkdir(parents=True, exist_ok=True)
    solver = replace(spec.solver, seed=spec.seed)
    for variant, flux in spec.matrix:
        scheme = spec.scheme(variant, flux)
        prev = None
        for n in spec.n_values:
            hist = None if out is None else out / f"history_{scheme.variant}_{scheme.flux}_n{n}.csv"
            record, _, _ = run_case(n, scheme, solver, spec.seed, spec.perturbation, history_csv=hist)
            if prev is not None:
                record.order_u = observed_order(prev.errors[1], record.errors[1], prev.h, record.h)
            log.info(
                "%s n=%d err_u=%.4e order_u=%s iters=%d %.1fs%s", scheme.label, n,
                record.errors[1], f"{record.order_u:.3f}", record.iterations, record.seconds,
                "" if record.converged else " NOT CONVERGED",
            )
            report.runs.append(record)
            prev = record
            if out is not None:
                report.write_csv(out / "study.csv")
                report.write_plot_data(out / "study.dat")
    return report
