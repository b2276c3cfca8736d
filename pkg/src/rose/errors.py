"""Exception types raised across the package."""


class RoseError(Exception):
    """Base class for all package errors."""


class InvalidGeometryError(RoseError, ValueError):
    pass


class InvalidInputError(RoseError, ValueError):
    pass


class InvalidWindowError(RoseError, ValueError):
    pass


class StepSizeError(RoseError, ValueError):
    """Raised when dt * max(|Omega|, |Delta|) exceeds the stability guard."""

    def __init__(self, message: str, suggested_dt: float):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class ConfigurationError(RoseError, ValueError):
    pass


class ParseError(RoseError, ValueError):
    """Syntax error in a sequence file, with 1-based line/column."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class SemanticError(RoseError, ValueError):
    """A sequence file parsed but violates a named rule."""

    def __init__(self, rule: str, message: str, line: int | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}[{rule}] {message}")
        self.rule = rule
        self.line = line
