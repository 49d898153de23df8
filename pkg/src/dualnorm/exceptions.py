"""Exception hierarchy shared by every module of the package."""

import numpy as np


class DualNormError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(DualNormError, ValueError):
    pass


class NotPositiveDefinite(DualNormError, np.linalg.LinAlgError):
    pass


class NonDifferentiablePoint(DualNormError, ValueError):
    pass


class UnsupportedNorm(DualNormError, ValueError):
    pass


class NoClosedForm(DualNormError, ValueError):
    pass


class InvalidGroupStructure(DualNormError, ValueError):
    pass


class InfeasiblePoint(DualNormError, ValueError):
    """Raised when a barrier quantity is requested outside the open unit ball."""


class LineSearchStall(DualNormError, RuntimeError):
    pass


class ZeroInput(DualNormError, ValueError):
    pass


class DimensionTooLarge(DualNormError, ValueError):
    pass


class SingularGram(DualNormError, np.linalg.LinAlgError):
    pass
