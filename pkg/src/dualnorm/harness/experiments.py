"""Simulation runner: random vectors, a norm per grid cell, one record per solve."""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from ..barrier import BarrierProblem
from ..exceptions import DimensionTooLarge, NoClosedForm
from ..norms import NormKind, NormSpec, analytic_dual
from ..oracle import MAX_DIMENSION, OracleConfig, brute_force_dual
from ..solver import DEFAULT_SCHEDULE, SolverConfig, solve_dual_continuation

REFERENCES = ("auto", "analytic", "oracle", "none")


@dataclass(frozen=True)
class ExperimentPlan:
    """What to simulate.

    ``p_grid`` drives the plain norms; the group kinds use the product of
    ``group_sizes`` and ``group_counts``. ``reference="auto"`` picks the
    closed form when there is one and the brute-force oracle when
    ``p <= oracle_max_p``. ``baseline`` also runs the fixed-barrier Newton
    solver on every instance.
    """

    kind: NormKind
    n: int = 50
    p_grid: tuple = ()
    group_sizes: tuple = ()
    group_counts: tuple = ()
    seed: int = 0
    solver: SolverConfig = field(default_factory=SolverConfig)
    schedule: tuple = DEFAULT_SCHEDULE
    reference: str = "auto"
    oracle_max_p: int = 4
    oracle_samples: int = 200_000
    baseline: bool = False
    timing: bool = False
    output: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", NormKind(self.kind))
        for name in ("p_grid", "group_sizes", "group_counts", "schedule"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.n < 1:
            raise ValueError("replication count n must be >= 1")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError(f"seed must be a nonnegative integer, got {self.seed!r}")
        if self.kind.is_group:
            if not self.group_sizes or not self.group_counts:
                raise ValueError(f"{self.kind.value} plans need nonempty group_sizes and group_counts")
            if min(self.group_sizes) < 1 or min(self.group_counts) < 1:
                raise ValueError("group sizes and counts must be >= 1")
        else:
            if not self.p_grid:
                raise ValueError(f"{self.kind.value} plans need a nonempty p grid")
            if min(self.p_grid) < 1:
                raise ValueError("dimensions must be >= 1")
        if not self.kind.is_smooth:
            raise ValueError(f"{self.kind.value} is nonsmooth; the barrier solver needs a smooth norm")
        if self.reference not in REFERENCES:
            raise ValueError(f"reference must be one of {REFERENCES}")
        if not 1 <= self.oracle_max_p <= MAX_DIMENSION:
            raise ValueError(f"oracle_max_p must lie in [1, {MAX_DIMENSION}]")

    def cells(self):
        """Grid cells as ``(p, group_size, n_groups)``; sizes are 0 for plain norms."""
        if not self.kind.is_group:
            return [(int(p), 0, 0) for p in self.p_grid]
        out = []
        for pg in self.group_sizes:
            for ng in self.group_counts:
                out.append((cell_dimension(self.kind, pg, ng), int(pg), int(ng)))
        return out


@dataclass(frozen=True)
class ExperimentRecord:
    replication: int
    p: int
    group_size: int
    n_groups: int
    reference: float | None
    reference_source: str
    dual_value: float
    difference: float | None
    iterations: int
    wall_time: float | None
    converged: bool
    baseline_value: float | None = None
    baseline_relative_gap: float | None = None

    @property
    def cell(self):
        if self.group_size:
            return f"pG={self.group_size} nG={self.n_groups}"
        return f"p={self.p}"

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


# --------------------------------------------------------------------------
# problem construction


def _stride(group_size):
    # consecutive groups share half their coordinates (rounded down)
    return group_size - group_size // 2


def cell_dimension(kind, group_size, n_groups):
    if NormKind(kind) is NormKind.OVERLAP_GROUP_L2:
        return _stride(group_size) * (n_groups - 1) + group_size
    return group_size * n_groups


def build_spec(kind, p, group_size=0, n_groups=0):
    """Norm for one grid cell: contiguous groups, overlapping by half for the overlap kind."""
    kind = NormKind(kind)
    if not kind.is_group:
        return NormSpec(kind, p)
    if kind is NormKind.GROUP_L2:
        groups = [list(range(g * group_size, (g + 1) * group_size)) for g in range(n_groups)]
        return NormSpec.group_l2(p, groups)
    s = _stride(group_size)
    groups = [list(range(g * s, g * s + group_size)) for g in range(n_groups)]
    return NormSpec.overlap_group_l2(p, groups)


def draw_vector(seed, cell, replication):
    """Standard normal draw keyed by ``(seed, cell, replication)``.

    Keying on the cell itself rather than its position keeps each draw
    fixed when the grid is extended or reordered, or run in parallel.
    """
    p, pg, ng = cell
    rng = np.random.default_rng([seed, p, pg, ng, replication])
    return rng.standard_normal(p)


def _reference(plan, spec, x):
    mode = plan.reference
    if mode in ("auto", "analytic"):
        try:
            return analytic_dual(spec, x), "analytic"
        except NoClosedForm:
            if mode == "analytic":
                return None, "none"
    if mode in ("auto", "oracle"):
        if spec.p <= plan.oracle_max_p:
            cfg = OracleConfig(n_samples=plan.oracle_samples, seed=plan.seed)
            return brute_force_dual(spec, x, cfg), "oracle"
        if mode == "oracle":
            raise DimensionTooLarge(f"oracle reference requested for p = {spec.p} > {plan.oracle_max_p}")
    return None, "none"


def run_single(plan, cell, replication):
    p, pg, ng = cell
    spec = build_spec(plan.kind, p, pg, ng)
    x = draw_vector(plan.seed, cell, replication)
    prob = BarrierProblem(x, spec, plan.schedule[0])

    t0 = time.perf_counter()
    res = solve_dual_continuation(prob, plan.solver, plan.schedule)
    elapsed = time.perf_counter() - t0

    ref, source = _reference(plan, spec, x)
    base_val = gap = None
    if plan.baseline:
        base = solve_dual_continuation(prob, plan.solver, plan.schedule, method="newton")
        base_val = base.dual_value
        gap = (res.dual_value - base_val) / max(abs(base_val), np.finfo(float).tiny)
    return ExperimentRecord(
        replication=replication,
        p=p,
        group_size=pg,
        n_groups=ng,
        reference=ref,
        reference_source=source,
        dual_value=res.dual_value,
        difference=None if ref is None else res.dual_value - ref,
        iterations=res.iterations,
        wall_time=elapsed if plan.timing else None,
        converged=res.converged,
        baseline_value=base_val,
        baseline_relative_gap=gap,
    )


def _run_task(args):
    return run_single(*args)


def worker_count(requested=None):
    """Worker processes to use: ``requested`` or the CPU count, capped by
    ``DUALNORM_THREADS`` when that is set."""
    n = requested or os.cpu_count() or 1
    cap = os.environ.get("DUALNORM_THREADS")
    if cap:
        try:
            cap = int(cap)
        except ValueError:
            raise ValueError(f"DUALNORM_THREADS must be a positive integer, got {cap!r}") from None
        if cap < 1:
            raise ValueError(f"DUALNORM_THREADS must be a positive integer, got {cap!r}")
        n = min(n, cap)
    return max(1, n)


def run_benchmark(plan, workers=None):
    """Solve every (cell, replication) of ``plan`` and yield the records.

    Records come out sorted by grid cell and then replication regardless
    of how many worker processes ran them. Solver failures to converge are
    recorded in ``converged``, not raised.
    """
    tasks = [(plan, cell, r) for cell in plan.cells() for r in range(plan.n)]
    n = min(worker_count(workers), len(tasks))
    if n <= 1:
        for t in tasks:
            yield _run_task(t)
        return
    with ProcessPoolExecutor(max_workers=n) as pool:
        # map preserves input order, which is the canonical order
        yield from pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * n)))


# --------------------------------------------------------------------------
# plan files

_PLAN_KEYS = {
    "kind", "n", "p", "p_grid", "group_sizes", "group_counts", "seed", "solver",
    "schedule", "rho_final", "reference", "oracle_max_p", "oracle_samples",
    "baseline", "timing", "output",
}


def schedule_to(rho_final, start=10.0):
    """Powers of ten from ``start`` down to ``rho_final`` (inclusive)."""
    if not 0 < rho_final < start:
        raise ValueError(f"final barrier constant must lie in (0, {start}), got {rho_final}")
    out = [start]
    while out[-1] * 0.1 > rho_final * (1 + 1e-9):
        out.append(out[-1] * 0.1)
    out.append(float(rho_final))
    return tuple(out)


def plan_from_dict(doc, seed=None):
    if not isinstance(doc, dict):
        raise ValueError("plan must be a JSON object")
    unknown = set(doc) - _PLAN_KEYS
    if unknown:
        raise ValueError(f"unknown plan keys: {sorted(unknown)}")
    if "kind" not in doc:
        raise ValueError("plan needs a 'kind'")
    kw = {k: doc[k] for k in doc if k not in ("p", "solver", "rho_final")}
    if "p" in doc:
        kw["p_grid"] = doc["p"]
    if "solver" in doc:
        kw["solver"] = SolverConfig(**doc["solver"])
    if "rho_final" in doc:
        if "schedule" in doc:
            raise ValueError("give either 'schedule' or 'rho_final', not both")
        kw["schedule"] = schedule_to(float(doc["rho_final"]))
    if seed is not None:
        kw["seed"] = seed
    try:
        kw["kind"] = NormKind(doc["kind"])
    except ValueError:
        raise ValueError(f"unknown norm kind {doc['kind']!r}") from None
    return ExperimentPlan(**kw)


def load_plan(path, seed=None):
    with open(Path(path)) as fh:
        return plan_from_dict(json.load(fh), seed=seed)


def record_dict(rec):
    return asdict(rec)
