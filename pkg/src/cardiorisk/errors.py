"""Exception types shared across the package."""


class CardioriskError(Exception):
    """Base class for all package errors."""


class ConfigurationError(CardioriskError, ValueError):
    """Invalid parameters, shapes or option combinations."""


class DataError(CardioriskError, ValueError):
    """Input data that cannot be processed (too short, non-finite, degenerate)."""


class SchemaError(CardioriskError, ValueError):
    """File or model schema mismatch (wrong version, wrong columns)."""
