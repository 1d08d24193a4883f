"""Exception hierarchy shared by all modules."""


class BetaConstError(Exception):
    """Base class for package errors."""


class ConfigError(BetaConstError, ValueError):
    """A configuration object violates its invariants."""


class InputError(BetaConstError, ValueError):
    """Data passed to an operation has the wrong shape or content."""


class DegenerateInputError(InputError):
    """Data is well formed but a required quantity vanishes (e.g. zero variation)."""


class ParseError(InputError):
    """A CSV file could not be parsed into a price table."""
