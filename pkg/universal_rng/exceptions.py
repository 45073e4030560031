"""
Exception hierarchy for the universal RNG package.

Every error raised on purpose by the library derives from UniversalRNGError,
so the launcher can map it to exit code 2.
"""


class UniversalRNGError(Exception):
    """Base class for all library errors."""


class ModelError(UniversalRNGError, ValueError):
    """Invalid model specification, parameters or model file."""


class SymbolError(UniversalRNGError, ValueError):
    """A symbol lies outside the alphabet [0, alpha)."""


class RankRangeError(UniversalRNGError, IndexError):
    """An index does not address a member of the type class."""


class ConfigurationError(UniversalRNGError, ValueError):
    """Invalid target set or experiment configuration."""


class ResourceLimitError(UniversalRNGError, RuntimeError):
    """An enumeration would exceed the configured bound."""


class InputExhaustedError(UniversalRNGError, EOFError):
    """The input stream ended before the generator could stop."""
