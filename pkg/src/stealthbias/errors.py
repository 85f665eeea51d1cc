"""Exception types shared across the package."""


class StealthError(Exception):
    """Base class for package errors."""


class SchemaError(StealthError, ValueError):
    """Malformed input file or configuration.

    ``row`` is 1-based over data rows (header excluded); ``column`` is the
    header name. Either may be None when not applicable.
    """

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class InfeasibleError(StealthError):
    """No feasible solution exists.

    Attributes
    ----------
    max_flow : int or None
        Achievable flow value when the failure came from a flow network.
    deficient_bins : list
        Bin labels whose demanded count exceeds the available records.
    """

    def __init__(self, message, max_flow=None, deficient_bins=None):
        super().__init__(message)
        self.max_flow = max_flow
        self.deficient_bins = list(deficient_bins or [])


class ConvergenceError(StealthError):
    """An iterative solver stopped before meeting its tolerances."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = dict(residuals or {})


class UndefinedMetricError(StealthError, ValueError):
    """A metric is undefined on the given data (e.g. a group is absent)."""
