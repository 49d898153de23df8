"""Log-barrier reformulation of ``sup { z'x : norm(z) <= 1 }``.

With slack ``u(z) = 1 - norm(z)`` the barrier objective is

    L(z) = -z'x - rho * log u(z),

and the adaptive-barrier surrogate anchored at ``a`` is

    g(z | a) = -z'x - rho * u(a) * log u(z) - rho * grad_norm(a)'(z - a).

``g(. | a) - g(a | a)`` dominates ``f(z) - f(a)`` for the linear objective
``f(z) = -z'x`` on the open unit ball, and matches it to first order at
``a``. That, not domination of ``L``, is what makes the MM iteration in
:mod:`dualnorm.solver` monotone.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatch, InfeasiblePoint, UnsupportedNorm
from .linalg import as_vector
from .norms import NormSpec, norm_gradient, norm_hessian, norm_value


@dataclass(frozen=True, eq=False)
class BarrierProblem:
    x: np.ndarray
    spec: NormSpec
    rho: float = 1.0

    def __post_init__(self):
        x = as_vector(self.x, "x")
        if x.size != self.spec.p:
            raise DimensionMismatch(f"x has length {x.size}, norm is over R^{self.spec.p}")
        if not self.spec.kind.is_smooth:
            raise UnsupportedNorm(
                f"{self.spec.kind.value} is nonsmooth; the Newton barrier method needs a C^2 norm"
            )
        if not (np.isfinite(self.rho) and self.rho > 0):
            raise ValueError(f"barrier constant must be positive, got {self.rho!r}")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "rho", float(self.rho))

    def with_rho(self, rho):
        return BarrierProblem(self.x, self.spec, rho)


def _z(prob, z):
    z = np.asarray(z, dtype=float)
    if z.shape != prob.x.shape:
        raise DimensionMismatch(f"z has shape {z.shape}, expected {prob.x.shape}")
    return z


def _positive_slack(prob, z):
    u = slack(prob, z)
    if not u > 0.0:
        raise InfeasiblePoint(f"slack {u:g} <= 0: point is outside the open unit ball")
    return u


def slack(prob, z):
    return 1.0 - norm_value(prob.spec, _z(prob, z))


def objective(prob, z):
    """The linear objective ``-z'x`` whose infimum is minus the dual norm."""
    return -float(_z(prob, z) @ prob.x)


def lagrangian(prob, z):
    z = _z(prob, z)
    u = _positive_slack(prob, z)
    return -float(z @ prob.x) - prob.rho * np.log(u)


def lagrangian_gradient(prob, z):
    z = _z(prob, z)
    u = _positive_slack(prob, z)
    return -prob.x + (prob.rho / u) * norm_gradient(prob.spec, z)


def lagrangian_hessian(prob, z):
    z = _z(prob, z)
    u = _positive_slack(prob, z)
    d1 = norm_gradient(prob.spec, z)
    return (prob.rho / u) * norm_hessian(prob.spec, z) + (prob.rho / u**2) * np.outer(d1, d1)


def surrogate_value(prob, z, anchor):
    """MM surrogate ``g(z | anchor)``."""
    z = _z(prob, z)
    anchor = _z(prob, anchor)
    u_a = _positive_slack(prob, anchor)
    u_z = _positive_slack(prob, z)
    d1 = norm_gradient(prob.spec, anchor)
    return -float(z @ prob.x) - prob.rho * u_a * np.log(u_z) - prob.rho * float(d1 @ (z - anchor))


def surrogate_gradient(prob, z, anchor):
    z = _z(prob, z)
    anchor = _z(prob, anchor)
    u_a = _positive_slack(prob, anchor)
    u_z = _positive_slack(prob, z)
    return (
        -prob.x
        + (prob.rho * u_a / u_z) * norm_gradient(prob.spec, z)
        - prob.rho * norm_gradient(prob.spec, anchor)
    )


def surrogate_hessian(prob, z, anchor):
    """Hessian of the surrogate in ``z``.

    At ``z == anchor`` this is ``rho * H(a) + (rho / u(a)) * g(a) g(a)'``
    with ``g``, ``H`` the norm gradient and Hessian.
    """
    z = _z(prob, z)
    anchor = _z(prob, anchor)
    u_a = _positive_slack(prob, anchor)
    u_z = _positive_slack(prob, z)
    d1 = norm_gradient(prob.spec, z)
    scale = prob.rho * u_a
    return (scale / u_z) * norm_hessian(prob.spec, z) + (scale / u_z**2) * np.outer(d1, d1)
