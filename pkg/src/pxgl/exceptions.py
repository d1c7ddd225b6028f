"""Exception hierarchy shared across the package."""


class PxglError(Exception):
    """Base class for all errors raised by pxgl."""


class InputError(PxglError, ValueError):
    """Invalid argument or malformed input data."""


class ParseError(InputError):
    """A dataset file could not be parsed."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class CapabilityError(PxglError, RuntimeError):
    """The request exceeds what the implementation supports."""


class NumericError(PxglError, ArithmeticError):
    """A non-finite value appeared during optimisation."""
