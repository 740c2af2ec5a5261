"""Exception hierarchy shared by all solver layers."""

from __future__ import annotations


class SoftRodError(Exception):
    """Base class for every error raised by the package."""


class NotSkewSymmetric(SoftRodError, ValueError):
    pass


class ZeroQuaternion(SoftRodError, ValueError):
    pass


class GridMismatch(SoftRodError, ValueError):
    pass


class OutOfWall(SoftRodError, ValueError):
    pass


class CollapsedWall(SoftRodError, ValueError):
    pass


class QuadratureFailure(SoftRodError, RuntimeError):
    pass


class NonPhysical(SoftRodError, RuntimeError):
    pass


class DegenerateSamples(SoftRodError, ValueError):
    pass


class NonPositiveStiffness(SoftRodError, ValueError):
    pass


class InsufficientHistory(SoftRodError, ValueError):
    pass


class NumericalBlowup(SoftRodError, RuntimeError):
    """A state component left the admissible magnitude band during integration."""

    def __init__(self, message: str, node: int | None = None, step: int | None = None):
        super().__init__(message)
        self.node = node
        self.step = step


class NoConvergence(SoftRodError, RuntimeError):
    """An iterative solve ran out of budget.

    ``residual`` holds the last (or best) residual vector, ``iterations`` the
    number of iterations spent, and ``x`` the corresponding iterate.
    """

    def __init__(self, message: str, residual=None, iterations: int = 0, x=None, step: int | None = None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.x = x
        self.step = step


class ParseError(SoftRodError, ValueError):
    """Configuration could not be parsed; ``field`` and ``line`` locate the problem."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        loc = []
        if field is not None:
            loc.append(f"field '{field}'")
        if line is not None:
            loc.append(f"line {line}")
        full = f"{message} ({', '.join(loc)})" if loc else message
        super().__init__(full)
        self.field = field
        self.line = line
