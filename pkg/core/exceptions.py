"""
Exception hierarchy for the sub-Finsler toolkit.

Report-only operations never raise these for failed checks; they are reserved
for invalid input and for numerical procedures that cannot produce a result.
"""

from typing import Any, Optional


class SubFinslerError(Exception):
    """Base class for all toolkit errors"""
    pass


class ValidationError(SubFinslerError, ValueError):
    """Invalid user input; `field` names the offending parameter"""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field

    def __str__(self) -> str:
        base = super().__str__()
        return f"{self.field}: {base}" if self.field else base


class DimensionMismatchError(ValidationError):
    """Operands live in Heisenberg groups of different dimension"""
    pass


class AdmissibleRangeError(ValidationError):
    """A parameter interval leaves the range where the construction is defined"""
    pass


class MultiplierError(ValidationError):
    """Multiplier data violates nontriviality, normality or the dual constraint"""
    pass


class NotStrictlyConvexError(SubFinslerError):
    """Operation needs a strictly convex norm"""
    pass


class DualGradientUndefinedError(SubFinslerError):
    """The dual norm is not differentiable at a point reached by the flow"""

    def __init__(self, message: str, point: Any = None):
        super().__init__(message)
        self.point = point


class ConstantCurveError(SubFinslerError):
    """Curve has zero length and cannot be reparametrized"""
    pass


class TraceTooShortError(SubFinslerError):
    """Trace does not cover the requested parameter range and cannot be extended"""
    pass


class LineInputError(SubFinslerError):
    """Trace is a straight line; no boundedness certificate exists"""
    pass


class ShootingConvergenceError(SubFinslerError):
    """Shooting did not reach the target; `best` holds the closest attempt"""

    def __init__(self, message: str, best: Any = None, residual: float = float('inf')):
        super().__init__(message)
        self.best = best
        self.residual = residual
