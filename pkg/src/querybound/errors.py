"""Exception hierarchy shared by every module."""


class QueryBoundError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(QueryBoundError, ValueError):
    pass


class EmptyPropertyError(QueryBoundError, ValueError):
    pass


class DegenerateInstanceError(QueryBoundError, ValueError):
    """Raised when U already satisfies the property, so D would be empty."""


class ParameterRangeError(QueryBoundError, ValueError):
    pass


class BudgetViolationError(QueryBoundError, RuntimeError):
    pass


class InvalidQueryError(QueryBoundError, IndexError):
    pass


class TreeValidationError(QueryBoundError, ValueError):
    pass


class CoinCoverageError(QueryBoundError, RuntimeError):
    """A tester drew more coins than the declared finite coin space allows."""


class ModeUnavailableError(QueryBoundError, ValueError):
    pass


class EnumerationBoundError(QueryBoundError, ValueError):
    pass


class InvariantViolation(QueryBoundError, AssertionError):
    """A proven inequality failed to hold. Always indicates a bug."""
