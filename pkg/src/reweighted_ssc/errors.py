"""Exception hierarchy.

The CLI maps the three families below onto its exit codes: configuration
problems (1), data problems (2) and numerical failures (3).
"""


class SSCError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(SSCError, ValueError):
    """An experiment, pipeline or generator configuration is invalid."""


class DataError(SSCError, ValueError):
    """Input data is malformed or inconsistent."""


class InvalidInputError(DataError):
    """Arguments to a numerical routine violate its preconditions."""


class DataFormatError(DataError):
    """A dataset file could not be parsed.

    ``row`` and ``column`` are 1-based positions in the file (the header is
    row 1) and may be ``None`` when the problem is not tied to a cell.
    """

    def __init__(self, message, row=None, column=None):
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column {column}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)
        self.row = row
        self.column = column


class EmptyDatasetError(DataFormatError):
    """A dataset file holds a header but no data rows."""


class NumericalError(SSCError):
    """A numerical routine could not produce a trustworthy answer."""


class ConvergenceError(NumericalError):
    """Iteration cap reached before the stopping rule was met."""

    def __init__(self, message, last_iterate=None, residual=None, row=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual
        self.row = row


class StaleSolutionError(NumericalError):
    """Coefficients passed in are not optimal for the stated problem."""


class SingularDictionaryError(NumericalError):
    """Dictionary columns are (numerically) linearly dependent."""


class DegenerateGeometryError(NumericalError):
    """Anchor system for a representation witness is singular."""


class DegenerateLambdaError(NumericalError):
    """The coarse solution is zero, so the regularization rule is undefined."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row
