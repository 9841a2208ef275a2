"""Exception hierarchy.

The CLI maps each family to an exit code: usage errors (2), data errors (3)
and numeric failures (4).
"""


class WhittleCPError(Exception):
    """Base class for all package errors."""

    exit_code = 1
    kind = "error"


class DomainError(WhittleCPError, ValueError):
    """A parameter lies outside its admissible range."""

    exit_code = 2
    kind = "domain"


class DataError(WhittleCPError):
    """Input data is missing, empty or malformed."""

    exit_code = 3
    kind = "data"


class NumericError(WhittleCPError, ArithmeticError):
    """A computation could not produce a finite answer."""

    exit_code = 4
    kind = "numeric"


class DegenerateSegmentError(NumericError):
    """All periodogram ordinates of a segment vanish, so the contrast is -inf."""

    kind = "degenerate-segment"


class InfeasibleSegmentationError(NumericError):
    """The candidate grid cannot host the requested number of breaks."""

    kind = "infeasible"


class ExclusionLimitError(NumericError):
    """Too many Monte-Carlo replications had to be excluded."""

    kind = "exclusion-limit"
