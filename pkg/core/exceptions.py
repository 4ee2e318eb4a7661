"""
Error taxonomy. Every error maps to a CLI exit code.
"""
from typing import Any, Dict, Optional


class LiveError(Exception):
    """Base class for all toolkit errors."""
    exit_code = 1


class ValidationError(LiveError):
    exit_code = 2


class DimensionMismatch(ValidationError):
    pass


class NonBinaryOutcome(ValidationError):
    def __init__(self, index: int, value: Any):
        self.index = index
        self.value = value
        super().__init__(f"outcome at index {index} is {value!r}, expected 0 or 1")


class NonFiniteEntry(ValidationError):
    def __init__(self, row: int, col: int):
        self.row = row
        self.col = col
        super().__init__(f"non-finite entry at row {row}, column {col}")


class BadInterceptColumn(ValidationError):
    def __init__(self, row: int, value: float):
        self.row = row
        self.value = value
        super().__init__(f"intercept column is {value!r} at row {row}, expected 1")


class ConfigError(ValidationError):
    def __init__(self, field_errors: Dict[str, str]):
        self.field_errors = dict(field_errors)
        detail = "; ".join(f"{k}: {v}" for k, v in self.field_errors.items())
        super().__init__(f"invalid configuration: {detail}")


class DomainError(ValidationError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class NumericalError(LiveError):
    exit_code = 3


class NotPositiveDefinite(NumericalError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"matrix is not positive definite: non-positive pivot at index {index}")


class NonConvergence(NumericalError):
    def __init__(self, message: str, iterations: int = 0):
        self.iterations = iterations
        super().__init__(message)


class SingularHessian(NumericalError):
    pass


class NoFiniteMu(NumericalError):
    pass


class InfeasibleDirection(NumericalError):
    def __init__(self, linf_residual: float, loading_residual: float, direction: Optional[Any] = None):
        self.linf_residual = linf_residual
        self.loading_residual = loading_residual
        self.direction = direction
        super().__init__(
            f"projection certificate not met: linf residual {linf_residual:.3e}, "
            f"loading residual {loading_residual:.3e}"
        )


class ZeroVariance(NumericalError):
    pass


class DataIOError(LiveError):
    exit_code = 4


class ParseError(DataIOError):
    def __init__(self, path: str, line: int, message: str):
        self.path = path
        self.line = line
        super().__init__(f"{path}:{line}: {message}")
