"""Command-line driver: ``edgefc [options]``.

Without ``--study`` the selected scheme/flux pair is run on every grid in
``--n`` (orders are reported when two or more sizes are given).  With
``--study`` the full five-pair matrix is run.  The exit status is 1 if any
run fails to converge and 2 on invalid options.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .mesh import GridSpec, generate_tet_grid, write_mesh
from .residual import SchemeConfig
from .solver import SolverConfig
from .verify import STUDY_MATRIX, STUDY_DROP, ConvergenceReport, StudySpec, observed_order, run_case, run_study

_SCHEMES = {"2nd": "second", "3rd-fr": "third_fr", "3rd-fc": "third_fc"}


def _n_list(text: str) -> list:
    try:
        values = [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid grid size list {text!r}") from None
    if not values or min(values) < 2:
        raise argparse.ArgumentTypeError("grid sizes must be integers >= 2")
    return values


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="edgefc",
        description="Manufactured-solution accuracy runs for edge-based third-order schemes "
        "on irregular tetrahedral grids.",
    )
    p.add_argument("--scheme", choices=sorted(_SCHEMES), default="3rd-fc")
    p.add_argument("--flux", choices=("roe", "hllc", "ldfss"), default="roe")
    p.add_argument("--n", type=_n_list, default=[16, 24, 32, 48],
                   help="grid sizes, comma or space separated (default: 16,24,32,48)")
    p.add_argument("--seed", type=int, default=0, help="grid and initial-state seed")
    p.add_argument("--perturb", type=float, default=0.25,
                   help="random node displacement as a fraction of the spacing")
    p.add_argument("--kappa", type=float, default=None,
                   help="U-MUSCL parameter (3rd-fc accepts only 0.5)")
    p.add_argument("--cfl-start", type=float, default=SolverConfig.cfl_start)
    p.add_argument("--cfl-max", type=float, default=SolverConfig.cfl_max)
    p.add_argument("--drop", type=float, default=STUDY_DROP,
                   help="residual drop in orders of magnitude (default: %(default)g)")
    p.add_argument("--max-iters", type=int, default=SolverConfig.max_nonlinear_iters)
    p.add_argument("--out", type=Path, default=Path("edgefc-out"), help="output directory")
    p.add_argument("--study", action="store_true", help="run the full scheme/flux matrix")
    p.add_argument("--export-mesh", action="store_true",
                   help="write each generated grid as mesh_n<N>.txt and skip solving")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _single(args, solver: SolverConfig) -> ConvergenceReport:
    kappa = 0.5 if args.kappa is None else args.kappa
    scheme = SchemeConfig(_SCHEMES[args.scheme], args.flux, kappa=kappa)
    spec_n = args.n if len(args.n) >= 2 else [args.n[0], args.n[0] + 1]
    spec = StudySpec(tuple(spec_n), ((scheme.variant, scheme.flux),), args.seed, args.perturb,
                     args.out, solver, kappa)
    report = ConvergenceReport(spec)
    prev = None
    for n in args.n:
        hist = args.out / f"history_{scheme.variant}_{scheme.flux}_n{n}.csv"
        record, _, _ = run_case(n, scheme, solver, args.seed, args.perturb, history_csv=hist)
        if prev is not None:
            record.order_u = observed_order(prev.errors[1], record.errors[1], prev.h, record.h)
        report.runs.append(record)
        prev = record
        print(_line(scheme.label, record), flush=True)
    return report


def _line(label, r) -> str:
    order = "" if r.order_u != r.order_u else f"  order_u {r.order_u:6.3f}"
    status = "" if r.converged else "  NOT CONVERGED"
    return (f"{label:14s} n={r.n:3d}  err_u {r.errors[1]:.4e}{order}  "
            f"iters {r.iterations:4d}  {r.seconds:7.1f}s{status}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s", stream=sys.stdout)
    if any(b <= a for a, b in zip(args.n, args.n[1:])):
        parser.error("--n must be strictly increasing")
    if args.scheme == "3rd-fc" and args.kappa is not None and args.kappa != 0.5:
        parser.error("--kappa must be 0.5 for 3rd-fc")
    if args.scheme == "3rd-fr" and args.flux != "roe":
        parser.error("3rd-fr is defined with the Roe flux only")
    try:
        solver = SolverConfig(cfl_start=args.cfl_start, cfl_max=args.cfl_max,
                              max_nonlinear_iters=args.max_iters, seed=args.seed,
                              convergence_drop=args.drop)
    except ValueError as exc:
        parser.error(str(exc))
    args.out.mkdir(parents=True, exist_ok=True)

    if args.export_mesh:
        for n in args.n:
            path = args.out / f"mesh_n{n}.txt"
            write_mesh(generate_tet_grid(GridSpec(n, perturbation_fraction=args.perturb,
                                                  seed=args.seed)), path)
            print(f"wrote {path}")
        return 0

    if args.study:
        if len(args.n) < 2:
            parser.error("--study needs at least two grid sizes")
        logging.getLogger("edgefc.verify").setLevel(logging.INFO)
        spec = StudySpec(tuple(args.n), STUDY_MATRIX, args.seed, args.perturb, args.out, solver,
                         0.5 if args.kappa is None else args.kappa)
        report = run_study(spec)
    else:
        report = _single(args, solver)
    report.write_csv(args.out / "study.csv")
    report.write_plot_data(args.out / "study.dat")
    print(f"results in {args.out}/study.csv and {args.out}/study.dat")
    return 0 if report.all_converged else 1


if __name__ == "__main__":
    sys.exit(main())
