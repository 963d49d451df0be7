"""Exception types shared across the package."""


class McrfsimError(Exception):
    """Base class for errors raised by mcrfsim."""


class EmptyInputError(McrfsimError):
    """An operation received an empty dataset where data is required."""


class DataError(McrfsimError):
    """Input data violates a structural requirement (geometry, duplicates, collisions)."""


class ConfigError(McrfsimError):
    """A model set or run configuration is incomplete or inconsistent."""


class UnreliableEntriesError(ConfigError):
    """Linear interpolation was requested for entries with no defined lag bins.

    The offending (tail, head) pairs are available on ``pairs``.
    """

    def __init__(self, pairs):
        self.pairs = list(pairs)
        names = ", ".join(f"({i},{j})" for i, j in self.pairs)
        super().__init__(
            f"no defined experimental bins for entries: {names}; "
            "use a mathematical model for these entries"
        )


class ParseError(McrfsimError):
    """A text file could not be parsed; carries the 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(McrfsimError):
    """A model-set document violates the document schema."""
