"""Hot loops for sums of weighted group norms.

Every group-type norm handled by the package has the form

    sum_g || coef_g * x[members_g] ||_2

with the groups stored flat: ``members`` holds 0-based coordinates,
``offsets`` delimits groups (length G + 1) and ``coef`` carries one positive
coefficient per member. The plain group lasso uses ``coef = sqrt(w_g)``
on every member of group g; the overlap norm uses the per-coordinate
weights.

Two implementations are kept side by side: explicit loops compiled with
numba, and a vectorised NumPy path. Which one runs is decided by
``dualnorm._accel`` (env flag ``DUALNORM_DISABLE_NUMBA``) and can be
switched at runtime with :func:`set_backend`.
"""

import numpy as np

from . import _accel
from ._accel import njit

# --------------------------------------------------------------------------
# numba kernels


@njit(cache=True)
def _group_norms_nb(x, members, offsets, coef):
    G = offsets.shape[0] - 1
    out = np.empty(G)
    for g in range(G):
        acc = 0.0
        for k in range(offsets[g], offsets[g + 1]):
            v = coef[k] * x[members[k]]
            acc += v * v
        out[g] = np.sqrt(acc)
    return out


@njit(cache=True)
def _gradient_nb(x, members, offsets, coef, norms):
    grad = np.zeros(x.shape[0])
    G = offsets.shape[0] - 1
    for g in range(G):
        inv = 1.0 / norms[g]
        for k in range(offsets[g], offsets[g + 1]):
            j = members[k]
            grad[j] += coef[k] * coef[k] * x[j] * inv
    return grad


@njit(cache=True)
def _hessian_nb(x, members, offsets, coef, norms):
    p = x.shape[0]
    H = np.zeros((p, p))
    G = offsets.shape[0] - 1
    for g in range(G):
        inv = 1.0 / norms[g]
        inv3 = inv * inv * inv
        for a in range(offsets[g], offsets[g + 1]):
            i = members[a]
            ca2 = coef[a] * coef[a]
            H[i, i] += ca2 * inv
            va = ca2 * x[i]
            for b in range(offsets[g], offsets[g + 1]):
                j = members[b]
                H[i, j] -= va * coef[b] * coef[b] * x[j] * inv3
    return H


@njit(cache=True)
def _batch_value_nb(U, members, offsets, coef):
    n = U.shape[0]
    G = offsets.shape[0] - 1
    out = np.zeros(n)
    for r in range(n):
        total = 0.0
        for g in range(G):
            acc = 0.0
            for k in range(offsets[g], offsets[g + 1]):
                v = coef[k] * U[r, members[k]]
                acc += v * v
            total += np.sqrt(acc)
        out[r] = total
    return out


# --------------------------------------------------------------------------
# NumPy kernels


def _group_norms_np(x, members, offsets, coef):
    sq = (coef * x[members]) ** 2
    return np.sqrt(np.add.reduceat(sq, offsets[:-1]))


def _group_ids(offsets):
    return np.repeat(np.arange(offsets.shape[0] - 1), np.diff(offsets))


def _gradient_np(x, members, offsets, coef, norms):
    gid = _group_ids(offsets)
    contrib = coef**2 * x[members] / norms[gid]
    return np.bincount(members, weights=contrib, minlength=x.shape[0])


def _hessian_np(x, members, offsets, coef, norms):
    p = x.shape[0]
    gid = _group_ids(offsets)
    c2 = coef**2
    diag = np.bincount(members, weights=c2 / norms[gid], minlength=p)
    V = np.zeros((p, offsets.shape[0] - 1))
    V[members, gid] = c2 * x[members]
    H = -(V / norms**3) @ V.T
    H[np.diag_indices(p)] += diag
    return H


def _batch_value_np(U, members, offsets, coef):
    sq = (U[:, members] * coef) ** 2
    return np.sqrt(np.add.reduceat(sq, offsets[:-1], axis=1)).sum(axis=1)


# --------------------------------------------------------------------------
# dispatch

_BACKENDS = {
    "numba": (_group_norms_nb, _gradient_nb, _hessian_nb, _batch_value_nb),
    "numpy": (_group_norms_np, _gradient_np, _hessian_np, _batch_value_np),
}
_backend = "numba" if _accel.USE_NUMBA else "numpy"


def get_backend():
    return _backend


def set_backend(name):
    """Select ``"numba"`` or ``"numpy"`` kernels; returns the previous name."""
    global _backend
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not _accel.HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is disabled or missing")
    previous, _backend = _backend, name
    return previous


def group_norms(x, members, offsets, coef):
    """Per-group norms ``||coef_g * x_g||_2`` (length G)."""
    return _BACKENDS[_backend][0](x, members, offsets, coef)


def group_gradient(x, members, offsets, coef, norms):
    """Gradient of the weighted group-norm sum; ``norms`` must be nonzero."""
    return _BACKENDS[_backend][1](x, members, offsets, coef, norms)


def group_hessian(x, members, offsets, coef, norms):
    return _BACKENDS[_backend][2](x, members, offsets, coef, norms)


def batch_value(U, members, offsets, coef):
    """Norm value for every row of ``U`` (used by the sampling oracle)."""
    return _BACKENDS[_backend][3](np.ascontiguousarray(U), members, offsets, coef)
