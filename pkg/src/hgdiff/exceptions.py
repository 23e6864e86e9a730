"""Exception hierarchy shared across the package."""


class HgDiffError(Exception):
    """Base class for all package errors."""


class ValidationError(HgDiffError, ValueError):
    """Input data violates a structural contract."""


class DatasetFormatError(HgDiffError, ValueError):
    """A dataset or pairs file could not be parsed.

    ``location`` names the offending field (and index where relevant).
    """

    def __init__(self, message, location=None):
        self.location = location
        if location is not None:
            message = f"{location}: {message}"
        super().__init__(message)


class UndefinedScoreError(HgDiffError, ValueError):
    """A statistic is undefined for the given input."""


class SolverError(HgDiffError, RuntimeError):
    """An iterative solver failed to converge."""

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class NumericError(HgDiffError, FloatingPointError):
    """A computation produced non-finite values."""


class DecodeError(HgDiffError, ValueError):
    """Power-sum moments could not be decoded into a valid multiset."""


class StaleCacheError(HgDiffError, RuntimeError):
    """A forward cache no longer matches the parameters it was built from."""
