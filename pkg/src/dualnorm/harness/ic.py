"""Dual-norm form of the irrepresentable condition for a given design."""

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .. import kernels
from ..barrier import BarrierProblem
from ..exceptions import DimensionMismatch, NonDifferentiablePoint, SingularGram
from ..norms import NormKind, analytic_dual, norm_gradient, restrict_spec
from ..solver import DEFAULT_SCHEDULE, solve_dual_continuation

# cross products below this fraction of the column norms count as zero
ORTHOGONALITY_TOL = 1e-12


@dataclass
class ICReport:
    value: float
    holds: bool
    v: np.ndarray
    support: list
    complement: list
    converged: bool
    iterations: int = 0


def _support_gradient(spec, x_star, support):
    """Norm gradient at ``x_star`` on the support coordinates.

    Groups lying entirely off the support are zero at ``x_star``; they do
    not touch the support entries and are skipped. Any group that meets
    the support must be nonzero there.
    """
    if spec.kind is NormKind.L1:
        # sign vector: the l1 gradient wherever no support entry is zero
        r = np.sign(x_star[support])
        if not np.all(r):
            raise NonDifferentiablePoint("x_star has a zero entry on the support")
        return r
    if not spec.kind.is_group:
        return norm_gradient(spec, x_star)[support]
    members, offsets, coef = spec._kernel_args
    norms = kernels.group_norms(x_star, members, offsets, coef)
    on_support = np.zeros(spec.p, dtype=bool)
    on_support[support] = True
    for g, idx in enumerate(spec.structure.groups):
        if norms[g] == 0 and on_support[list(idx)].any():
            raise NonDifferentiablePoint(f"group {g + 1} meets the support but x_star vanishes on it")
    safe = np.where(norms > 0, norms, np.inf)
    return kernels.group_gradient(x_star, members, offsets, coef, safe)[support]


def _cross(A0, A1):
    C = A0.T @ A1
    scale = np.outer(np.linalg.norm(A0, axis=0), np.linalg.norm(A1, axis=0))
    C[np.abs(C) <= ORTHOGONALITY_TOL * scale] = 0.0
    return C


def irrepresentable_dual(A, support, spec, x_star, schedule=DEFAULT_SCHEDULE, cfg=None):
    """Dual norm of ``A0' A1 (A1' A1)^-1 r1`` over the off-support coordinates.

    Parameters
    ----------
    A : (n, p) array
    support : iterable of int
        0-based column indices of the active set; nonempty and proper.
    spec : NormSpec
        Norm over all ``p`` coefficients.
    x_star : array
        Length ``p``, or length ``len(support)`` for the support values only.

    Returns
    -------
    ICReport
        ``value`` is the dual norm (exactly 0 when the off-support columns
        are orthogonal to the support columns) and ``holds`` is
        ``value < 1``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise DimensionMismatch(f"design must be a matrix, got shape {A.shape}")
    p = A.shape[1]
    if spec.p != p:
        raise DimensionMismatch(f"design has {p} columns, norm is over R^{spec.p}")
    support = sorted({int(i) for i in support})
    if not support or len(support) >= p:
        raise DimensionMismatch("support must be a nonempty proper subset of the columns")
    if support[0] < 0 or support[-1] >= p:
        raise DimensionMismatch(f"support indices must lie in [0, {p})")
    complement = [j for j in range(p) if j not in set(support)]

    x_star = np.asarray(x_star, dtype=float).reshape(-1)
    if x_star.size == len(support):
        full = np.zeros(p)
        full[support] = x_star
        x_star = full
    elif x_star.size != p:
        raise DimensionMismatch(f"x_star must have length {p} or {len(support)}, got {x_star.size}")

    A1, A0 = A[:, support], A[:, complement]
    gram = A1.T @ A1
    try:
        factor = sla.cho_factor(gram, lower=True)
    except np.linalg.LinAlgError:
        raise SingularGram("support columns are linearly dependent") from None
    if np.linalg.cond(gram) > 1.0 / np.finfo(float).eps:
        raise SingularGram("support Gram matrix is numerically singular")

    r1 = _support_gradient(spec, x_star, support)
    v = _cross(A0, A1) @ sla.cho_solve(factor, r1)

    sub = restrict_spec(spec, complement)
    if not np.any(v):
        return ICReport(0.0, True, v, support, complement, True)
    if not sub.kind.is_smooth:
        value = analytic_dual(sub, v)
        return ICReport(value, value < 1.0, v, support, complement, True)
    res = solve_dual_continuation(BarrierProblem(v, sub, schedule[0]), cfg, schedule)
    return ICReport(res.dual_value, res.dual_value < 1.0, v, support, complement, res.converged, res.iterations)
