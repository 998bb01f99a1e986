"""Exception hierarchy shared across the package."""


class SpinterfaceError(Exception):
    """Base class for all package errors."""


class DomainError(SpinterfaceError, ValueError):
    """Input outside the mathematical domain of an operation."""


class ConfigError(SpinterfaceError):
    """Malformed or incomplete configuration."""
