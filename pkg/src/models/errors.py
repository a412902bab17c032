"""
Exception hierarchy for the dispersion models.

Flagged-but-valid results (ill-conditioned solves, partial impulse trains,
sponge warnings) are reported on the result objects, not raised.
"""


class DispersionError(Exception):
    """Base class for every error raised by this package."""


class MediumError(DispersionError, ValueError):
    """Invalid medium input; ``index`` points at the offending entry."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class PreconditionError(DispersionError, ValueError):
    """An operation was called outside the regime it is defined for."""


class ContractionError(DispersionError, ArithmeticError):
    """A Möbius step whose geometric expansion does not converge (rho >= 1)."""

    def __init__(self, message: str, rho: float, step: int | None = None):
        super().__init__(message)
        self.rho = rho
        self.step = step


class SeriesShapeError(DispersionError, ValueError):
    """Generator-count mismatch, bad generator index or malformed dump text."""


class SourceError(DispersionError, ValueError):
    """Source support is not strictly inside a single layer."""


class SearchBudgetError(DispersionError, RuntimeError):
    """Heavy-partition search ran out of budget before reaching the target."""

    def __init__(self, message: str, best_bound: float, best_partition=None):
        super().__init__(message)
        self.best_bound = best_bound
        self.best_partition = best_partition


class ConfigError(DispersionError, ValueError):
    """Experiment config violates the schema; ``path`` is a JSON pointer."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
