"""Exception types raised by ltsmio."""


class LTSError(Exception):
    """Base class for all package errors."""


class DegenerateDataError(LTSError, ValueError):
    """A column or the response has no spread, or the data is malformed."""

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class NotPositiveDefiniteError(LTSError, ValueError):
    """Cholesky factorization met a non-positive pivot."""

    def __init__(self, pivot):
        super().__init__(f"matrix is not positive definite (pivot {pivot})")
        self.pivot = pivot


class SingularUpdateError(LTSError, ValueError):
    """Sherman-Morrison denominator vanished."""


class UndefinedMetricError(LTSError, ValueError):
    """Metric undefined for the given ground truth (e.g. recall with no outliers)."""


class InvalidWeightsError(LTSError, ValueError):
    """Perspective weights do not keep the quadratic form positive semidefinite."""


class UnsupportedDirectionError(LTSError, ValueError):
    """Construction requires a nonzero direction vector."""


class EnumerationGuardError(LTSError, ValueError):
    """Brute-force enumeration would exceed the configured work guard."""
