"""Dual-norm solvers.

Two iterations are provided, both started from ``c0 * x / norm(x)`` and
both keeping every iterate strictly inside the unit ball by backtracking:

``solve_dual``
    Adaptive-barrier MM. Each outer iteration anchors the surrogate
    ``g(. | z_k)`` and takes ``inner_steps`` damped Newton steps on it. The
    first step uses ``dg = -x`` and ``d2g = rho * H(z_k) + rho / u(z_k) *
    grad(z_k) grad(z_k)'``. Accepted steps decrease the surrogate, hence
    the linear objective ``-z'x``; its values form ``objective_trace``.
    Because the barrier weight shrinks with the slack, the iterates reach
    the boundary of the ball and there is no barrier bias.

``newton_solve``
    Plain Newton on the fixed-``rho`` barrier objective ``L``. Its
    minimiser satisfies ``x'z = dual_norm(x) - rho`` exactly, so it is
    used with a decreasing ``rho`` schedule (see
    :func:`solve_dual_continuation`).

Both stop on ``|f_k - f_{k-1}| <= tol`` for their tracked objective, and
never before the second iteration.

The Hessian of a group norm is singular along each group's own direction
and unbounded as a group shrinks to zero, and optima of these norms
typically sit with whole groups at zero. By default (``curvature=
"majorizer"``) the diagonal majorizer ``sum_g c_g**2 / ||c_g * z_g||`` is
used in its place, so each Newton system is diagonal plus rank one and is
solved in O(p). Groups whose share of ``x'z`` drops below 1e-14 are fixed
at zero; for disjoint groups, those certified inactive are zeroed at once.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .barrier import lagrangian
from .exceptions import LineSearchStall, NonDifferentiablePoint, NotPositiveDefinite, ZeroInput
from .linalg import solve_spd
from .norms import NormKind, norm_gradient, norm_hessian, norm_value

logger = logging.getLogger(__name__)

DEFAULT_SCHEDULE = tuple(10.0**k for k in range(1, -7, -1))


class Termination(str, enum.Enum):
    TOLERANCE_MET = "ToleranceMet"
    MAX_ITER = "MaxIter"
    LINE_SEARCH_STALL = "LineSearchStall"


@dataclass(frozen=True)
class SolverConfig:
    """Knobs shared by the MM and Newton iterations.

    Attributes
    ----------
    tol : float
        Stop when the tracked objective changes by at most ``tol``.
    maxiter : int
        Cap on outer iterations (per barrier constant).
    inner_steps : int
        Newton steps on each MM surrogate before re-anchoring.
    step : float
        Nominal step length ``gamma``.
    backtrack_factor, backtrack_cap : float, int
        Step shrink factor and the number of shrinks tried.
    rho : float
        Barrier constant.
    init_shrink : float
        ``c0`` in the starting point ``c0 * x / norm(x)``.
    """

    tol: float = 1e-8
    maxiter: int = 1000
    inner_steps: int = 50
    step: float = 1.0
    backtrack_factor: float = 0.5
    backtrack_cap: int = 60
    rho: float = 1.0
    init_shrink: float = 0.5
    curvature: str = "majorizer"
    prune: bool = True

    def __post_init__(self):
        if self.curvature not in ("exact", "majorizer"):
            raise ValueError("curvature must be 'exact' or 'majorizer'")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.maxiter < 1 or self.inner_steps < 1 or self.backtrack_cap < 1:
            raise ValueError("maxiter, inner_steps and backtrack_cap must be >= 1")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if not 0 < self.init_shrink < 1:
            raise ValueError("init_shrink must lie in (0, 1)")


@dataclass
class SolveResult:
    z_star: np.ndarray
    dual_value: float
    iterations: int
    objective_trace: list
    converged: bool
    termination_reason: Termination
    slack_trace: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# initialisation


def initial_point(prob, cfg):
    """Starting point and the coordinates that had to be perturbed.

    Group sub-vectors of ``x`` that vanish identically would put the start
    on a kink of the norm; those coordinates get ``1e-8 * ||x||_inf`` added
    before scaling. The problem's ``x`` itself is left untouched.
    """
    x = prob.x
    xmax = float(np.abs(x).max())
    if xmax == 0.0:
        raise ZeroInput("x = 0: its dual norm is 0")
    direction = x.copy()
    perturbed = []
    s = prob.spec.structure
    if s is not None:
        for g in s.groups:
            idx = list(g)
            if not np.any(direction[idx]):
                direction[idx] += 1e-8 * xmax
                perturbed.extend(idx)
    z0 = cfg.init_shrink * direction / norm_value(prob.spec, direction)
    return z0, sorted(set(perturbed))


def initialize(prob, cfg):
    return initial_point(prob, cfg)[0]


# --------------------------------------------------------------------------
# local derivatives tolerant of frozen (identically zero) groups


def _derivatives(spec, z, cfg):
    """Norm value, gradient and curvature at ``z``.

    The curvature is a dense matrix for ``curvature="exact"`` and the
    diagonal of the majorizer (a 1-d array) otherwise. Groups that are
    identically zero contribute nothing to the gradient or the curvature
    (the minimum-norm subgradient); the solver keeps their coordinates
    fixed at zero.
    """
    if not spec.kind.is_group:
        nrm = norm_value(spec, z)
        if cfg.curvature == "exact":
            curv = norm_hessian(spec, z)
        else:
            curv = np.full(z.size, 1.0 / nrm) if nrm > 0 else np.full(z.size, np.inf)
        return nrm, norm_gradient(spec, z), curv
    members, offsets, coef = spec._kernel_args
    norms = kernels.group_norms(z, members, offsets, coef)
    safe = np.where(norms > 0, norms, np.inf)
    grad = kernels.group_gradient(z, members, offsets, coef, safe)
    if cfg.curvature == "exact":
        curv = kernels.group_hessian(z, members, offsets, coef, safe)
        curv = 0.5 * (curv + curv.T)
    else:
        per_member = coef**2 / np.repeat(safe, np.diff(offsets))
        curv = np.bincount(members, weights=per_member, minlength=z.size)
    return float(norms.sum()), grad, curv


def _direction(alpha, curv, beta, v, g, free):
    """Solve ``(alpha * C + beta * v v') d = g`` on the free coordinates.

    A 1-d ``curv`` is a diagonal ``C`` and the system is solved in O(p) by
    Sherman-Morrison; a 2-d one goes through the dense SPD solver.
    """
    d = np.zeros_like(g)
    if free is not None and not free.all():
        g, v = g[free], v[free]
        curv = curv[free] if curv.ndim == 1 else curv[np.ix_(free, free)]
    else:
        free = slice(None)
    if curv.ndim == 2:
        d[free] = solve_spd(alpha * curv + beta * np.outer(v, v), g)
        return d
    diag = alpha * curv
    if not np.all(np.isfinite(diag)) or not np.all(diag > 0):
        raise NotPositiveDefinite("majorizer curvature is not finite and positive")
    dg = g / diag
    dv = v / diag
    d[free] = dg - (beta * float(v @ dg) / (1.0 + beta * float(v @ dv))) * dv
    return d


def _freeze(prob, z, free):
    """Zero out groups whose share of ``x'z`` has become negligible.

    Such groups are shrinking geometrically towards a kink of the norm;
    fixing them at zero keeps the curvature finite. Zeroing can only lower
    the norm, so feasibility is preserved.
    """
    spec = prob.spec
    if not spec.kind.is_group:
        return z, free, []
    members, offsets, coef = spec._kernel_args
    norms = kernels.group_norms(z, members, offsets, coef)
    scale = max(abs(float(prob.x @ z)), np.finfo(float).tiny)
    total = norms.sum()
    frozen = []
    for g, idx in enumerate(spec.structure.groups):
        if norms[g] == 0.0 or norms[g] > _FREEZE_NORM * total:
            continue
        idx = list(idx)
        if np.abs(prob.x[idx] * z[idx]).sum() <= _FREEZE_SHARE * scale:
            frozen.append(g)
    if not frozen:
        return z, free, []
    z = z.copy()
    free = np.ones(z.size, dtype=bool) if free is None else free.copy()
    for g in frozen:
        idx = list(spec.structure.groups[g])
        z[idx] = 0.0
        free[idx] = False
    return z, free, frozen


_FREEZE_NORM = 1e-8
_FREEZE_SHARE = 1e-14


# --------------------------------------------------------------------------
# single steps


def _backtrack(z, direction, cfg, accept):
    """First of ``z - t d``, ``t = step * factor**m``, that ``accept`` maps to a point."""
    t = cfg.step
    for _ in range(cfg.backtrack_cap + 1):
        cand = z - t * direction
        got = accept(cand)
        if got is not None:
            return got
        t *= cfg.backtrack_factor
    raise LineSearchStall(f"no acceptable step after {cfg.backtrack_cap} reductions")


def mm_newton_step(prob, z_k, cfg, free=None):
    """One MM cycle anchored at ``z_k``; returns the next iterate.

    Up to ``cfg.inner_steps`` Newton steps are taken on the surrogate
    ``g(. | z_k)``; the inner loop ends early once the surrogate decreases
    by at most ``cfg.tol``. The first step uses ``dg = -x`` and
    ``d2g = rho * C(z_k) + rho / u(z_k) * grad(z_k) grad(z_k)'`` where ``C``
    is the norm Hessian (``curvature="exact"``) or its quadratic majorizer.
    Every step is backtracked until the candidate is strictly feasible and
    neither the surrogate nor ``-z'x`` increases. A trial point outside the
    ball is first pulled back radially to half the current slack: near the
    boundary this is what lets the iterate keep moving along it.

    Raises
    ------
    LineSearchStall
        If the first step admits no acceptable length.
    NotPositiveDefinite
        If the Newton system cannot be factorised.
    """
    x, rho = prob.x, prob.rho
    a = np.asarray(z_k, dtype=float)
    nrm_a, d1_a, curv_a = _derivatives(prob.spec, a, cfg)
    u_a = 1.0 - nrm_a
    if not u_a > 0:
        raise LineSearchStall("anchor is not strictly feasible")
    f_a = -float(a @ x)

    def surrogate(z, u_z):
        return -float(z @ x) - rho * u_a * np.log(u_z) - rho * float(d1_a @ (z - a))

    z, u_z, g_z = a, u_a, surrogate(a, u_a)
    for inner in range(cfg.inner_steps):
        if inner == 0:
            direction = _direction(rho, curv_a, rho / u_a, d1_a, -x, free)
        else:
            _, d1, curv = _derivatives(prob.spec, z, cfg)
            scale = rho * u_a / u_z
            grad = -x + scale * d1 - rho * d1_a
            direction = _direction(scale, curv, scale / u_z, d1, grad, free)
        state = {}

        def accept(cand):
            nrm = norm_value(prob.spec, cand)
            if not nrm < 1.0:
                # radial retraction to half the current slack keeps steps
                # along the boundary possible once the slack is tiny
                cand = cand * ((1.0 - 0.5 * u_z) / nrm)
                nrm = norm_value(prob.spec, cand)
            u = 1.0 - nrm
            if not u > 0:
                return None
            val = surrogate(cand, u)
            if val <= g_z and -float(cand @ x) <= f_a:
                state.update(u=u, val=val)
                return cand
            return None

        try:
            z = _backtrack(z, direction, cfg, accept)
        except LineSearchStall:
            if inner == 0:
                raise
            break
        decrease = g_z - state["val"]
        u_z, g_z = state["u"], state["val"]
        if decrease <= cfg.tol:
            break
    return z


def newton_step(prob, z_k, cfg, free=None):
    """One damped Newton step on the fixed-``rho`` barrier objective ``L``."""
    z_k = np.asarray(z_k, dtype=float)
    nrm, d1, curv = _derivatives(prob.spec, z_k, cfg)
    u = 1.0 - nrm
    if not u > 0:
        raise LineSearchStall("iterate is not strictly feasible")
    L_k = -float(z_k @ prob.x) - prob.rho * np.log(u)
    grad = -prob.x + (prob.rho / u) * d1
    direction = _direction(prob.rho / u, curv, prob.rho / u**2, d1, grad, free)

    def accept(cand):
        u = 1.0 - norm_value(prob.spec, cand)
        if u > 0 and -float(cand @ prob.x) - prob.rho * np.log(u) <= L_k:
            return cand
        return None

    return _backtrack(z_k, direction, cfg, accept)


# --------------------------------------------------------------------------
# drivers


def _zero_result(prob, method):
    return SolveResult(
        z_star=np.zeros_like(prob.x),
        dual_value=0.0,
        iterations=0,
        objective_trace=[0.0],
        converged=True,
        termination_reason=Termination.TOLERANCE_MET,
        slack_trace=[1.0],
        diagnostics={"zero_input": True, "method": method, "rho": prob.rho},
    )


def _tracked(prob, z, method):
    if method == "mm":
        return -float(z @ prob.x)
    return lagrangian(prob, z)


def _rescaled(spec, z_new, level):
    nrm = norm_value(spec, z_new)
    return z_new * (level / nrm) if nrm > 0 else None


def _group_index(spec):
    return [list(g) for g in spec.structure.groups]


def _prune(prob, z, free, method, current):
    """Zero the group-lasso groups that are certifiably inactive.

    For disjoint groups the dual norm is ``max_g ||x_g|| / sqrt(w_g)`` and
    ``x'z / norm(z)`` bounds it from below, so any group whose ratio falls
    under that bound is zero at the optimum. Its mass otherwise decays only
    geometrically, at a rate near one for near ties. The group is zeroed
    and the rest scaled back to ``norm(z)``, which keeps the slack; the
    move is kept only if the tracked objective strictly decreases.

    Overlapping groups have no such certificate and are left alone.
    """
    spec = prob.spec
    if spec.kind is not NormKind.GROUP_L2:
        return z, free, current, []
    members, offsets, coef = spec._kernel_args
    norms = kernels.group_norms(z, members, offsets, coef)
    level = float(norms.sum())
    bound = float(prob.x @ z) / level
    ratios = kernels.group_norms(prob.x, members, offsets, coef) / spec.structure.weights
    groups = _group_index(spec)
    pruned = []
    for g in np.flatnonzero((norms > 0) & (ratios < bound * (1.0 - 1e-12))):
        trial = z.copy()
        trial[groups[g]] = 0.0
        cand = _rescaled(spec, trial, level)
        if cand is None or not 1.0 - norm_value(spec, cand) > 0:
            continue
        val = _tracked(prob, cand, method)
        if val < current:
            z, current = cand, val
            free = np.ones(z.size, dtype=bool) if free is None else free.copy()
            free[groups[g]] = False
            pruned.append(int(g))
    return z, free, current, pruned


def _run(prob, cfg, z0, free, method):
    step = mm_newton_step if method == "mm" else newton_step
    z = np.array(z0, dtype=float)
    trace = [_tracked(prob, z, method)]
    slacks = [1.0 - norm_value(prob.spec, z)]
    frozen_groups, pruned_groups = [], []
    reason = Termination.MAX_ITER
    stop_note = None
    k = 0
    while k < cfg.maxiter:
        try:
            z_new = step(prob, z, cfg, free)
        except (LineSearchStall, NonDifferentiablePoint, NotPositiveDefinite) as exc:
            logger.debug("%s stopped at iteration %d: %s", method, k, exc)
            reason = Termination.LINE_SEARCH_STALL
            stop_note = f"{type(exc).__name__}: {exc}"
            break
        k += 1
        value = _tracked(prob, z_new, method)
        if cfg.prune:
            z_new, free, value, newly = _prune(prob, z_new, free, method, value)
            pruned_groups.extend(newly)
        z, free, newly = _freeze(prob, z_new, free)
        if newly:
            frozen_groups.extend(newly)
            value = _tracked(prob, z, method)
        trace.append(value)
        slacks.append(1.0 - norm_value(prob.spec, z))
        if k >= 2 and abs(trace[-1] - trace[-2]) <= cfg.tol:
            reason = Termination.TOLERANCE_MET
            break
    diagnostics = {
        "method": method,
        "rho": prob.rho,
        "curvature": cfg.curvature,
        "frozen_groups": sorted(frozen_groups),
        "pruned_groups": sorted(pruned_groups),
        "free_mask": free,
    }
    if stop_note:
        diagnostics["stop"] = stop_note
    return SolveResult(
        z_star=z,
        dual_value=float(prob.x @ z),
        iterations=k,
        objective_trace=trace,
        converged=reason is Termination.TOLERANCE_MET,
        termination_reason=reason,
        slack_trace=slacks,
        diagnostics=diagnostics,
    )


def _solve(prob, cfg, z0, free, method):
    if cfg is None:
        cfg = SolverConfig(rho=prob.rho)
    if not np.any(prob.x):
        return _zero_result(prob, method)
    perturbed = []
    if z0 is None:
        z0, perturbed = initial_point(prob, cfg)
    res = _run(prob, cfg, z0, free, method)
    res.diagnostics["perturbed_coordinates"] = perturbed
    return res


def solve_dual(prob, cfg=None, z0=None):
    """Dual norm of ``prob.x`` by the adaptive-barrier MM iteration.

    The barrier constant is ``prob.rho`` (``cfg.rho`` is only a default for
    callers that build the problem from a config). ``z0`` overrides the
    starting point and must be strictly feasible.
    """
    return _solve(prob, cfg, z0, None, "mm")


def newton_solve(prob, cfg=None, z0=None):
    """Fixed-``rho`` barrier Newton baseline; ``x'z`` is biased low by ``rho``."""
    return _solve(prob, cfg, z0, None, "newton")


def dual_scale(prob):
    """``||x||_2^2 / norm(x)``, a lower bound on the dual norm of ``x``."""
    x = prob.x
    nrm = norm_value(prob.spec, x)
    return float(x @ x) / nrm if nrm > 0 else 0.0


def solve_dual_continuation(prob, cfg=None, schedule=DEFAULT_SCHEDULE, method="mm", relative=True):
    """Run ``method`` over a decreasing barrier schedule with warm starts.

    Parameters
    ----------
    prob : BarrierProblem
        Its ``rho`` is replaced by each schedule entry in turn.
    cfg : SolverConfig, optional
    schedule : sequence of float
        Strictly decreasing positive barrier constants.
    method : {"mm", "newton"}
    relative : bool
        Multiply the schedule and ``cfg.tol`` by :func:`dual_scale`. This
        keeps every constant below the dual norm and makes the whole run
        invariant to the scale of ``x``. With ``relative=False`` both are
        used as given.

    Returns
    -------
    SolveResult
        Iterations are summed over stages; ``objective_trace`` concatenates
        the stage traces, which are also kept in
        ``diagnostics["stage_traces"]`` together with the per-stage dual
        values.
    """
    schedule = tuple(float(r) for r in schedule)
    if not schedule:
        raise ValueError("empty barrier schedule")
    if any(not r > 0 for r in schedule) or any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("barrier schedule must be positive and strictly decreasing")
    if method not in ("mm", "newton"):
        raise ValueError(f"unknown method {method!r}")
    cfg = cfg or SolverConfig()
    if not np.any(prob.x):
        return _zero_result(prob, method)
    scale = dual_scale(prob) if relative else 1.0

    z, free = None, None
    stages = []
    for rho in schedule:
        stage_cfg = replace(cfg, rho=rho * scale, tol=cfg.tol * scale)
        res = _solve(prob.with_rho(rho * scale), stage_cfg, z, free, method)
        stages.append(res)
        z, free = res.z_star, res.diagnostics["free_mask"]
    if len(stages) == 1:
        return stages[0]

    last = stages[-1]
    trace = list(stages[0].objective_trace)
    slacks = list(stages[0].slack_trace)
    for st in stages[1:]:
        trace.extend(st.objective_trace[1:])
        slacks.extend(st.slack_trace[1:])
    diagnostics = dict(last.diagnostics)
    diagnostics.update(
        schedule=[r * scale for r in schedule],
        stage_traces=[st.objective_trace for st in stages],
        stage_dual_values=[st.dual_value for st in stages],
        stage_iterations=[st.iterations for st in stages],
        stage_terminations=[st.termination_reason.value for st in stages],
        frozen_groups=sorted({g for st in stages for g in st.diagnostics["frozen_groups"]}),
        perturbed_coordinates=stages[0].diagnostics["perturbed_coordinates"],
    )
    return SolveResult(
        z_star=last.z_star,
        dual_value=last.dual_value,
        iterations=sum(st.iterations for st in stages),
        objective_trace=trace,
        converged=last.converged,
        termination_reason=last.termination_reason,
        slack_trace=slacks,
        diagnostics=diagnostics,
    )
