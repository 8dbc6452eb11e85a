"""Exception hierarchy shared by every nba module."""


class NBAError(Exception):
    """Base class for all errors raised by the package."""


class InputError(NBAError, ValueError):
    """Malformed instance, plan or spec data.

    ``field`` is a JSON-pointer-like path to the offending value when known.
    """

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class PlanShapeError(InputError):
    """A plan references a slot, source or edge the instance does not have."""


class PreconditionError(NBAError):
    """An operation was called on input violating its precondition."""

    def __init__(self, message: str, details=None):
        self.details = details
        super().__init__(message)


class ResourceLimitError(NBAError):
    """A search exceeded its configured limits."""

    def __init__(self, message: str, counts: dict | None = None):
        self.counts = counts or {}
        super().__init__(message)


class StructuralError(NBAError):
    """A MILP model does not have the structure an algorithm expects."""
