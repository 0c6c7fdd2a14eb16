"""Exception hierarchy. ValidationError covers bad user input/config; DataError
covers runtime failures on otherwise-valid input (the CLI maps them to exit
codes 1 and 2 respectively)."""


class FidrouteError(Exception):
    pass


class ValidationError(FidrouteError):
    pass


class ParseError(ValidationError):
    """Syntax error in a text input. Carries a 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class NoPathError(FidrouteError):
    """Requested endpoints lie in different connected components."""


class DataError(FidrouteError):
    pass
