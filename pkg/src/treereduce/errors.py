"""Shared exception types."""


class ParseError(ValueError):
    """Raised on malformed tree text; carries a 1-based source position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ResourceLimitError(RuntimeError):
    """Raised when an enumeration exceeds its configured state/trace cap."""


class ReductionError(RuntimeError):
    """Raised when the rewrite engine exceeds its termination budget."""
