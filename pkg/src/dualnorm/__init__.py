"""Numerical dual norms of sparsity-inducing norms via an adaptive log barrier."""

from .barrier import BarrierProblem
from .exceptions import DualNormError
from .norms import NormKind, NormSpec, analytic_dual, load_norm_spec, norm_gradient, norm_hessian, norm_value
from .oracle import OracleConfig, brute_force_dual
from .solver import SolverConfig, SolveResult, newton_solve, solve_dual, solve_dual_continuation

__version__ = "0.1.0"

__all__ = [
    "BarrierProblem",
    "DualNormError",
    "NormKind",
    "NormSpec",
    "OracleConfig",
    "SolveResult",
    "SolverConfig",
    "analytic_dual",
    "brute_force_dual",
    "load_norm_spec",
    "newton_solve",
    "norm_gradient",
    "norm_hessian",
    "norm_value",
    "solve_dual",
    "solve_dual_continuation",
]
