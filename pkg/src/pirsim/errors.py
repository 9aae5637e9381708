"""Exception hierarchy shared by every pirsim module."""


class PirError(Exception):
    """Base class for all pirsim errors."""


class ParameterError(PirError, ValueError):
    """Invalid scheme parameters or arguments."""


class ProtocolError(PirError):
    """Malformed wire data or a query that does not fit the store."""


class IntegrityError(PirError):
    """Answers and the user's private plan do not line up during decoding."""


class CursorExhausted(PirError, RuntimeError):
    """More fresh symbols were requested than a message has.

    Query generation guarantees this never happens, so seeing it means a bug.
    """


class BudgetExceeded(PirError):
    """An exhaustive enumeration would exceed the configured outcome budget."""
