"""Brute-force dual norms for small dimensions.

The oracle only ever evaluates the norm itself. By homogeneity every
direction ``u`` maps to the boundary point ``u / norm(u)``, so

    dual(x) = max_u  x'u / norm(u),

and a maximum over random directions followed by a compass search gives
a lower bound that tightens from below. Nothing here touches gradients,
Hessians or the barrier code, so it can referee them.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .exceptions import DimensionMismatch, DimensionTooLarge
from .linalg import as_vector
from .norms import NormKind

MAX_DIMENSION = 8
_CHUNK = 8192


@dataclass(frozen=True)
class OracleConfig:
    n_samples: int = 200_000
    polish_steps: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.polish_steps < 0:
            raise ValueError("polish_steps must be >= 0")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError(f"seed must be a nonnegative integer, got {self.seed!r}")


def batch_norm(spec, U):
    """Norm of every row of ``U``."""
    U = np.asarray(U, dtype=float)
    kind = spec.kind
    if kind is NormKind.L1:
        return np.abs(U).sum(axis=1)
    if kind is NormKind.LINF:
        return np.abs(U).max(axis=1)
    if kind is NormKind.L2:
        return np.linalg.norm(U, axis=1)
    return kernels.batch_value(U, *spec._kernel_args)


def _ratios(spec, x, U):
    nrm = batch_norm(spec, U)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.abs(U @ x) / nrm
    return np.where(nrm > 0, r, -np.inf)


def _sample(spec, x, cfg):
    """Best sampled direction. Chunk ``k`` draws from its own stream
    ``(seed, k)``, so the result does not depend on how chunks are scheduled."""
    best_val, best_u = -np.inf, None
    for k, start in enumerate(range(0, cfg.n_samples, _CHUNK)):
        m = min(_CHUNK, cfg.n_samples - start)
        rng = np.random.default_rng([cfg.seed, k])
        U = rng.standard_normal((m, spec.p))
        r = _ratios(spec, x, U)
        i = int(np.argmax(r))
        if r[i] > best_val:
            best_val, best_u = float(r[i]), U[i]
    if best_u is None or not np.isfinite(best_val):
        best_u = x.copy()
        best_val = float(_ratios(spec, x, best_u[None, :])[0])
    if best_u @ x < 0:
        best_u = -best_u
    return best_val, best_u


def _polish(spec, x, u, val, levels):
    """Compass search on ``x'u / norm(u)`` with the step halved per level."""
    p = u.size
    u = u / np.abs(u).max()
    moves = np.vstack([np.eye(p), -np.eye(p)])
    step = 0.5
    for _ in range(levels):
        for _ in range(10_000):
            cand = u + step * moves
            r = _ratios(spec, x, cand)
            i = int(np.argmax(r))
            if not r[i] > val:
                break
            val, u = float(r[i]), cand[i]
        step *= 0.5
    return val


def brute_force_dual(spec, x, cfg=None):
    """Lower bound on the dual norm of ``x`` by sampling plus local search.

    Raises
    ------
    DimensionTooLarge
        For ``p > 8``, where uniform sampling of the sphere stops being
        informative.
    """
    cfg = cfg or OracleConfig()
    if spec.p > MAX_DIMENSION:
        raise DimensionTooLarge(f"brute force is limited to p <= {MAX_DIMENSION}, got p = {spec.p}")
    x = as_vector(x, "x")
    if x.size != spec.p:
        raise DimensionMismatch(f"x has length {x.size}, norm is over R^{spec.p}")
    if not np.any(x):
        return 0.0
    val, u = _sample(spec, x, cfg)
    return _polish(spec, x, u, val, cfg.polish_steps)
