"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Inconsistent dimensions, invalid scenario constants, or a bad config file."""


class DomainError(ValueError):
    """An argument outside the mathematical domain of an operation."""


class NumericError(ArithmeticError):
    """Non-finite inputs or a linear-algebra breakdown inside a solver."""
