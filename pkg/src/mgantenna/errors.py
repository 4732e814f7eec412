"""Exception hierarchy shared by the solver, optimizer and CLI."""


class MGAError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(MGAError, ValueError):
    """Argument outside the domain of a special function."""


class ValidationError(MGAError, ValueError):
    """Invalid design, configuration, or argument."""


class SingularityError(MGAError, ValueError):
    """Field requested at the location of a line source."""


class SolverError(MGAError, RuntimeError):
    """Singular or ill-conditioned MoM system."""

    def __init__(self, message, design=None):
        super().__init__(message)
        self.design = design


class MetricsError(MGAError, ValueError):
    """Pattern metrics undefined (all-zero or flat pattern)."""


class AccuracyWarning(UserWarning):
    """Numerical accuracy is not guaranteed for the requested geometry."""
