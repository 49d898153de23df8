"""Command line entry point: ``dualnorm {dual,bench,check-ic}``.

Exit codes: 0 success, 2 invalid input, 3 solver did not converge.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ..barrier import BarrierProblem
from ..exceptions import DualNormError
from ..norms import analytic_dual, load_norm_spec
from ..oracle import OracleConfig, brute_force_dual
from ..solver import solve_dual_continuation
from .experiments import load_plan, run_benchmark, schedule_to
from .ic import irrepresentable_dual
from .io import parse_support, read_matrix_csv, read_vector_csv, write_vector_csv
from .report import emit_boxplot_svg, emit_csv

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NOT_CONVERGED = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _emit(doc):
    print(json.dumps(doc, indent=2, sort_keys=True))


def cmd_dual(args):
    spec = load_norm_spec(args.norm)
    x = read_vector_csv(args.x)
    if x.size != spec.p:
        raise ValueError(f"x has length {x.size}, norm is over R^{spec.p}")
    doc = {"kind": spec.kind.value, "p": spec.p}
    if not spec.kind.is_smooth:
        doc.update(dual_value=analytic_dual(spec, x), method="closed form", converged=True)
        _emit(doc)
        return EXIT_OK
    schedule = schedule_to(args.rho_final)
    res = solve_dual_continuation(BarrierProblem(x, spec, schedule[0]), schedule=schedule)
    doc.update(
        dual_value=res.dual_value,
        iterations=res.iterations,
        converged=res.converged,
        termination=res.termination_reason.value,
    )
    if args.oracle:
        doc["oracle_value"] = brute_force_dual(spec, x, OracleConfig(seed=args.seed or 0))
    if args.z_out:
        write_vector_csv(args.z_out, res.z_star)
    _emit(doc)
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_bench(args):
    plan = load_plan(args.plan, seed=args.seed)
    out = Path(args.out)
    records = list(run_benchmark(plan, workers=args.workers))
    csv_path = emit_csv(records, out / "records.csv")
    has_ref = any(r.difference is not None for r in records)
    value = "difference" if has_ref else "baseline_relative_gap"
    svg_path = None
    if has_ref or plan.baseline:
        svg_path = emit_boxplot_svg(records, out / "boxplot.svg", value=value, title=f"{plan.kind.value}: {value}")
    diffs = np.array([abs(r.difference) for r in records if r.difference is not None])
    gaps = np.array([abs(r.baseline_relative_gap) for r in records if r.baseline_relative_gap is not None])
    summary = {
        "records": len(records),
        "not_converged": sum(not r.converged for r in records),
        "csv": str(csv_path),
        "svg": None if svg_path is None else str(svg_path),
    }
    if diffs.size:
        summary.update(max_abs_difference=float(diffs.max()), median_abs_difference=float(np.median(diffs)))
    if gaps.size:
        summary.update(max_abs_baseline_gap=float(gaps.max()), median_abs_baseline_gap=float(np.median(gaps)))
    _emit(summary)
    return EXIT_OK


def cmd_check_ic(args):
    A = read_matrix_csv(args.design)
    support = parse_support(args.support)
    spec = load_norm_spec(args.norm)
    x_star = read_vector_csv(args.xstar)
    rep = irrepresentable_dual(A, support, spec, x_star, schedule=schedule_to(args.rho_final))
    _emit(
        {
            "dual_value": rep.value,
            "condition_holds": bool(rep.holds),
            "converged": rep.converged,
            "support": [i + 1 for i in rep.support],
            "v": [float(t) for t in rep.v],
        }
    )
    return EXIT_OK if rep.converged else EXIT_NOT_CONVERGED


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="RNG seed (overrides the plan seed; oracle seed, default 0)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="dualnorm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("dual", parents=[common], help="dual norm of one vector")
    d.add_argument("--norm", required=True, help="norm spec JSON")
    d.add_argument("--x", required=True, help="vector CSV (one column)")
    d.add_argument("--rho-final", type=float, default=1e-6, help="last barrier constant (relative)")
    d.add_argument("--oracle", action="store_true", help="also report the brute-force value (p <= 8)")
    d.add_argument("--z-out", help="write the maximiser to this CSV")
    d.set_defaults(func=cmd_dual)

    b = sub.add_parser("bench", parents=[common], help="run a simulation plan")
    b.add_argument("--plan", required=True, help="plan JSON")
    b.add_argument("--out", required=True, help="output directory")
    b.add_argument("--workers", type=int, default=None, help="worker processes (capped by DUALNORM_THREADS)")
    b.set_defaults(func=cmd_bench)

    c = sub.add_parser("check-ic", parents=[common], help="irrepresentable-condition dual norm")
    c.add_argument("--design", required=True, help="design matrix CSV (n rows, p columns)")
    c.add_argument("--support", required=True, help="1-based support indices, e.g. '1,2' or '1-3'")
    c.add_argument("--norm", required=True, help="norm spec JSON over the p coefficients")
    c.add_argument("--xstar", required=True, help="coefficient vector CSV (length p or |support|)")
    c.add_argument("--rho-final", type=float, default=1e-6)
    c.set_defaults(func=cmd_check_ic)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (DualNormError, ValueError, TypeError, OSError, json.JSONDecodeError, np.linalg.LinAlgError) as exc:
        print(f"dualnorm: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
