"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or out-of-contract input."""


class ParseError(InputError):
    """Polynomial text that does not follow the grammar."""

    def __init__(self, message, text="", line=1, column=1):
        self.text = text
        self.line = line
        self.column = column
        super().__init__(f"{message} (line {line}, column {column})")


class NumericInconsistencyError(ArithmeticError):
    """A quantity that must be non-negative came out clearly negative."""


class NotLiftableError(InputError):
    """g vanishes at the point, so t = -f/g is undefined."""


class SingularLocusError(ArithmeticError):
    """A vector field coefficient blew up; ``payload`` carries diagnostics."""

    def __init__(self, message, payload=None):
        self.payload = dict(payload or {})
        super().__init__(message)
