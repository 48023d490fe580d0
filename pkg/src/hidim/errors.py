"""Exception types shared across the package."""


class InvalidInput(ValueError):
    """An argument violates an operation's precondition."""


class ConstructionFailed(RuntimeError):
    """A randomized construction exhausted its attempt budget."""


class IOFailure(OSError):
    """A report could not be written."""
