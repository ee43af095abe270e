"""Compare the compiled and pure-Python linear-solver kernels.

    python benchmarks/bench_kernels.py [--n 16 24] [--sweeps 8] [--repeat 3]

Times one block symmetric Gauss-Seidel solve and one block matrix-vector
product per backend on the Jacobian of a perturbed manufactured solution and
reports the speedup of the compiled backend.
"""
import argparse
import time

import numpy as np

from edgefc import kernels
from edgefc.mesh import GridSpec, compute_dual_metrics, generate_tet_grid
from edgefc.residual import Discretization
from edgefc.solver import DefectCorrectionJacobian, SolverConfig, initialize_states


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, nargs="+", default=[16, 24])
    p.add_argument("--sweeps", type=int, default=8)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled kernels not built; timing the python backend only")
    print(f"{'n':>4} {'nodes':>7} {'kernel':>7} " + " ".join(f"{b:>10}" for b in backends)
          + ("    speedup" if len(backends) == 2 else ""))
    saved = kernels.get_backend()
    try:
        for n in args.n:
            mesh = generate_tet_grid(GridSpec(n))
            disc = Discretization(mesh, compute_dual_metrics(mesh))
            jac = DefectCorrectionJacobian(disc)
            jac.update(initialize_states(disc, SolverConfig()))
            rhs = np.random.default_rng(0).normal(size=(disc.n_nodes, 5))
            tasks = {
                "sgs": lambda: jac.solve(rhs, 100.0, args.sweeps),
                "matvec": lambda: jac.matvec(rhs, 100.0),
            }
            for name, fn in tasks.items():
                t = {}
                for b in backends:
                    kernels.set_backend(b)
                    t[b] = best_of(fn, args.repeat)
                line = f"{n:>4} {disc.n_nodes:>7} {name:>7} " + " ".join(
                    f"{t[b] * 1e3:>8.1f}ms" for b in backends)
                if len(backends) == 2:
                    line += f"  {t['python'] / t['compiled']:8.1f}x"
                print(line, flush=True)
    finally:
        kernels.set_backend(saved)


if __name__ == "__main__":
    main()
