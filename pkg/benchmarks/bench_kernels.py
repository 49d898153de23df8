"""Numba vs NumPy timings for the group-norm kernels and one full solve.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""

import argparse
import json
import sys
import timeit

import numpy as np

from dualnorm import kernels
from dualnorm.barrier import BarrierProblem
from dualnorm.harness import build_spec, cell_dimension
from dualnorm.solver import solve_dual_continuation

CELLS = [(2, 5), (5, 10), (10, 20), (10, 100)]


def _time(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def bench(repeat):
    rows = []
    rng = np.random.default_rng(0)
    for pg, ng in CELLS:
        p = cell_dimension("overlap_group_l2", pg, ng)
        spec = build_spec("overlap_group_l2", p, pg, ng)
        args = spec._kernel_args
        x = rng.standard_normal(p)
        U = rng.standard_normal((4096, p))
        norms = kernels.group_norms(x, *args)
        cases = {
            "group_norms": lambda: kernels.group_norms(x, *args),
            "gradient": lambda: kernels.group_gradient(x, *args, norms),
            "hessian": lambda: kernels.group_hessian(x, *args, norms),
            "batch_value[4096]": lambda: kernels.batch_value(U, *args),
        }
        for name, fn in cases.items():
            row = {"p": p, "groups": ng, "kernel": name}
            for backend in ("numpy", "numba"):
                kernels.set_backend(backend)
                fn()  # compile / warm up
                row[backend] = _time(fn, repeat, 200 if "batch" not in name else 5)
            rows.append(row)
        if p <= 200:
            prob = BarrierProblem(x, spec, 1.0)
            row = {"p": p, "groups": ng, "kernel": "solve"}
            for backend in ("numpy", "numba"):
                kernels.set_backend(backend)
                solve_dual_continuation(prob)
                row[backend] = _time(lambda: solve_dual_continuation(prob), max(1, repeat // 2), 1)
            rows.append(row)
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write the rows here")
    args = ap.parse_args(argv)
    if not kernels._accel.HAVE_NUMBA:
        print("numba is unavailable or disabled; nothing to compare", file=sys.stderr)
        return 1
    previous = kernels.get_backend()
    try:
        rows = bench(args.repeat)
    finally:
        kernels.set_backend(previous)
    print(f"{'p':>5} {'G':>4} {'kernel':<18} {'numpy [us]':>11} {'numba [us]':>11} {'speedup':>8}")
    for r in rows:
        print(
            f"{r['p']:>5} {r['groups']:>4} {r['kernel']:<18} {r['numpy'] * 1e6:>11.1f} "
            f"{r['numba'] * 1e6:>11.1f} {r['numpy'] / r['numba']:>8.2f}"
        )
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
