# Core package initialization

from .exceptions import (
    SubFinslerError, ValidationError, DimensionMismatchError,
    AdmissibleRangeError, MultiplierError, NotStrictlyConvexError,
    DualGradientUndefinedError, ConstantCurveError, TraceTooShortError,
    LineInputError, ShootingConvergenceError
)

__all__ = [
    'SubFinslerError',
    'ValidationError',
    'DimensionMismatchError',
    'AdmissibleRangeError',
    'MultiplierError',
    'NotStrictlyConvexError',
    'DualGradientUndefinedError',
    'ConstantCurveError',
    'TraceTooShortError',
    'LineInputError',
    'ShootingConvergenceError'
]
