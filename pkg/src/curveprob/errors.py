"""Exception taxonomy shared across the package.

Three failure classes matter to callers (and to the CLI exit codes):
structural mismatches between objects, plain misuse of an API, and inputs
that are formally valid but numerically degenerate.
"""


class CurveProbError(Exception):
    """Base class for all package-specific errors."""


class StructureError(CurveProbError):
    """Objects that should share a grid/shape/layout do not."""


class UsageError(CurveProbError):
    """An argument violates a documented precondition (CLI exit code 2)."""


class DegenerateInputError(CurveProbError):
    """Input is numerically degenerate, e.g. a zero spectrum (CLI exit code 3)."""


class ParseError(UsageError):
    """A file or string could not be parsed; carries row/column context."""

    def __init__(self, message, row=None, column=None):
        loc = ""
        if row is not None:
            loc += f" (row {row}"
            loc += f", column {column})" if column is not None else ")"
        super().__init__(message + loc)
        self.row = row
        self.column = column


class RangeExhaustedError(CurveProbError):
    """A quantile search hit the end of its range; carries the boundary estimate."""

    def __init__(self, message, boundary_estimate):
        super().__init__(message)
        self.boundary_estimate = boundary_estimate
