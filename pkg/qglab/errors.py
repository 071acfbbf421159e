"""
Exception hierarchy for qglab.
"""
from typing import Any, List, Optional, Sequence


class QGLabError(Exception):
    """Base class for all qglab errors."""


class InvalidParameterError(QGLabError, ValueError):
    """A construction or configuration parameter is out of range."""


class PreconditionError(QGLabError, ValueError):
    """An operation was called outside its documented domain."""


class ShiftTooSmallError(QGLabError):
    """
    V + M is not positive at a sampled point.

    Attributes:
        point (Sequence[float]): Offending sample point
        value (float): Value of V + M at the point
    """

    def __init__(self, point: Sequence[float], value: float):
        self.point = tuple(float(x) for x in point)
        self.value = float(value)
        super().__init__(
            f"V + M = {self.value:.6g} <= 0 at x = {self.point}; increase the shift M"
        )


class IncompatibleSpacesError(QGLabError):
    """Operands live on different graphs or spaces of different dimension."""


class NotInH1Error(QGLabError):
    """
    A graph function violates vertex continuity.

    Attributes:
        vertex (int): Index of the worst vertex
        discrepancy (float): Largest deviation among incident edge values
    """

    def __init__(self, vertex: int, discrepancy: float, tolerance: float):
        self.vertex = int(vertex)
        self.discrepancy = float(discrepancy)
        self.tolerance = float(tolerance)
        super().__init__(
            f"function is not continuous at vertex {self.vertex}: "
            f"discrepancy {self.discrepancy:.3e} > {self.tolerance:.1e}"
        )


class UndefinedRatioError(QGLabError):
    """A norm ratio was requested for a zero input."""


class MissingDerivativeError(QGLabError):
    """A sampled profile without derivative samples was differentiated."""


class ResolventSingularError(QGLabError):
    """A resolvent system is singular or too close to singular."""


class EdgeSingularError(QGLabError):
    """sin(k'l) vanishes: z hits the Dirichlet spectrum of a single edge."""


class ConsistencyFailureError(QGLabError):
    """
    A computed resolvent or eigenpair fails its own defining equations.

    Attributes:
        residual (float): Relative residual that exceeded the tolerance
    """

    def __init__(self, message: str, residual: float):
        self.residual = float(residual)
        super().__init__(f"{message} (relative residual {self.residual:.3e})")


class EstimationFailureError(QGLabError):
    """
    A norm estimate did not converge within its iteration budget.

    Attributes:
        last_estimate (float): Last norm estimate
        last_iterate (Any): Last normalized iterate
    """

    def __init__(self, message: str, last_estimate: float, last_iterate: Any):
        self.last_estimate = float(last_estimate)
        self.last_iterate = last_iterate
        super().__init__(message)


class NonConvergenceError(QGLabError):
    """
    A fixed-point iteration did not converge.

    Attributes:
        history (List[float]): Iterates in order
    """

    def __init__(self, message: str, history: Optional[List[float]] = None):
        self.history = list(history or [])
        super().__init__(message)


class InvalidIntervalError(QGLabError, ValueError):
    """A search interval is malformed or reaches a singular threshold."""


class BoundaryCollisionError(QGLabError):
    """
    A spectral window boundary lies on (or next to) an eigenvalue.

    Attributes:
        boundary (float): The colliding window end
        eigenvalue (float): The nearby eigenvalue
    """

    def __init__(self, boundary: float, eigenvalue: float):
        self.boundary = float(boundary)
        self.eigenvalue = float(eigenvalue)
        super().__init__(
            f"window boundary {self.boundary:.10g} is within separation of "
            f"eigenvalue {self.eigenvalue:.10g}"
        )


class EmptySetError(QGLabError, ValueError):
    """A set-valued argument is empty."""


class ShiftViolationError(QGLabError):
    """An eigenvalue lies at or below -M."""


class InsufficientResolutionError(QGLabError):
    """
    The Richardson error estimate exceeds the requested tolerance.

    Attributes:
        worst_error (float): Largest estimated error
        tolerance (float): Requested tolerance
    """

    def __init__(self, worst_error: float, tolerance: float):
        self.worst_error = float(worst_error)
        self.tolerance = float(tolerance)
        super().__init__(
            f"Richardson error estimate {self.worst_error:.3e} exceeds "
            f"tolerance {self.tolerance:.1e}; refine the grid"
        )


class ReportIOError(QGLabError, OSError):
    """
    A report, table or figure file cannot be read or written.

    Attributes:
        path (str): The offending file
    """

    def __init__(self, path: str, reason: str):
        self.path = str(path)
        super().__init__(f"report file {self.path}: {reason}")
