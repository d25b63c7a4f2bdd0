"""Exception types shared across the package."""


class SpdStatsError(Exception):
    """Base class for all package errors."""


class ShapeError(SpdStatsError, ValueError):
    """Dimension or structural mismatch in inputs."""


class DomainError(SpdStatsError, ValueError):
    """Input left the mathematical domain of an operation.

    Carries ``lambda_min`` (offending smallest eigenvalue, when known) and
    ``index`` (position within a stack, when known).
    """

    def __init__(self, message, lambda_min=None, index=None):
        super().__init__(message)
        self.lambda_min = lambda_min
        self.index = index


class NumericalError(SpdStatsError, ArithmeticError):
    """A numerical routine failed to converge or overflowed."""


class StateError(SpdStatsError, RuntimeError):
    """An operation was called before its required state existed."""


class DegenerateGroupError(SpdStatsError, ValueError):
    """A group's fourth-moment variance is zero, so the test statistic is undefined."""


class SingularScatterError(SpdStatsError, ValueError):
    """The total scatter matrix is singular; the requested statistic is undefined."""


class UnsupportedMetric(SpdStatsError, ValueError):
    """The selected metric does not provide the requested operation."""


class ValidationError(SpdStatsError, ValueError):
    """Malformed external input (manifest, matrix file, CLI argument)."""
