"""Dense vector/matrix helpers and the SPD solve behind every Newton step.

Vectors are 1-d float64 ndarrays and symmetric matrices are 2-d float64
ndarrays; ``as_vector`` and ``as_symmetric`` check the invariants once at
the API boundary so the numeric code can stay plain NumPy.
"""

import numpy as np
from scipy import linalg as sla

from .exceptions import DimensionMismatch, NotPositiveDefinite

#: diagonal shifts tried, in order, when a Cholesky factorisation fails
JITTER_SCHEDULE = tuple(10.0**k for k in range(-10, -1))


def as_vector(a, name="vector"):
    if np.ndim(a) > 1:
        raise DimensionMismatch(f"{name} must be one-dimensional, got shape {np.shape(a)}")
    v = np.array(a, dtype=float).reshape(-1)
    if v.size < 1:
        raise DimensionMismatch(f"{name} must have at least one entry")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def as_symmetric(H, name="matrix"):
    """Return ``H`` as a float array, symmetrised from its lower triangle."""
    H = np.array(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1] or H.shape[0] < 1:
        raise DimensionMismatch(f"{name} must be square, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise ValueError(f"{name} has non-finite entries")
    lower = np.tril(H)
    return lower + np.tril(H, -1).T


def dot(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionMismatch(f"cannot dot shapes {a.shape} and {b.shape}")
    return float(a @ b)


def _factor(H):
    try:
        c = sla.cho_factor(H, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(c[0])):
        return None
    return c


def solve_spd(H, g, jitter=JITTER_SCHEDULE):
    """Solve ``H d = g`` for symmetric positive definite ``H``.

    A Cholesky factorisation is attempted first. If it breaks down, the
    diagonal is shifted by each value of ``jitter`` in turn; the solve
    then targets ``(H + tau I) d = g``. One step of iterative refinement is
    applied against the (possibly shifted) matrix.

    Raises
    ------
    NotPositiveDefinite
        If every shift in ``jitter`` fails as well.
    DimensionMismatch
        If the shapes of ``H`` and ``g`` disagree.
    """
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1] or g.shape != (H.shape[0],):
        raise DimensionMismatch(f"cannot solve system with H{H.shape} and g{g.shape}")

    A = H
    c = _factor(H)
    if c is None:
        eye = np.eye(H.shape[0])
        for tau in jitter:
            A = H + tau * eye
            c = _factor(A)
            if c is not None:
                break
        else:
            raise NotPositiveDefinite(
                f"matrix not positive definite even with diagonal shift {jitter[-1] if jitter else 0:g}"
            )
    d = sla.cho_solve(c, g, check_finite=False)
    d += sla.cho_solve(c, g - A @ d, check_finite=False)
    return d
