"""Exception hierarchy shared by all modules."""
from __future__ import annotations


class PermShapeError(Exception):
    """Base class; ``module`` names the subsystem that raised it."""

    module = "permshape"


class DomainError(PermShapeError, ValueError):
    module = "specfun"


class PoleError(DomainError):
    pass


class UnsupportedOrderError(DomainError):
    pass


class DivergenceError(PermShapeError, ValueError):
    """A power series was evaluated at or beyond its radius of convergence."""

    module = "weights"


class SolverError(PermShapeError, RuntimeError):
    module = "weights"

    def __init__(self, message: str, bracket: tuple[float, float] | None = None):
        if bracket is not None:
            message = f"{message} (bracket={bracket[0]!r}, {bracket[1]!r})"
        super().__init__(message)
        self.bracket = bracket


class SeriesOverflowError(PermShapeError, OverflowError):
    module = "series"


class DegenerateModelError(PermShapeError, ValueError):
    module = "series"


class UndefinedMeasureError(PermShapeError, ValueError):
    """The normalising constant h_n vanishes, so P_n does not exist."""

    module = "series"


class NoSaddleError(PermShapeError, ValueError):
    module = "saddle"


class RemainderError(PermShapeError, RuntimeError):
    module = "asymptotics"

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved abs error {achieved:.3g})")
        self.achieved = achieved


class RejectionBudgetError(PermShapeError, RuntimeError):
    module = "sampler"

    def __init__(self, attempts: int, accepted: int = 0):
        rate = accepted / attempts if attempts else 0.0
        super().__init__(
            f"rejection budget of {attempts} attempts exhausted "
            f"(observed acceptance rate {rate:.3g})"
        )
        self.attempts = attempts
        self.acceptance_rate = rate


class ConfigError(PermShapeError, ValueError):
    module = "config"

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
