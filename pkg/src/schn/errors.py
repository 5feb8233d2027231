"""Exception hierarchy shared across the package."""


class SchnError(Exception):
    """Base class for all package errors."""


class ConfigError(SchnError):
    """Invalid configuration value, flag, or file."""


class FormatError(SchnError):
    """Malformed binary or text artifact."""


class BadMagicError(FormatError):
    """File does not start with the expected magic bytes."""


class VersionError(FormatError):
    """Unsupported format version."""


class TruncatedError(FormatError):
    """Payload shorter than the header promises."""


class DimensionError(FormatError):
    """Header dimensions out of range or inconsistent."""


class ShapeMismatchError(SchnError):
    """Stored tensor does not match the expected shape."""


class QuadratureError(SchnError):
    """Quadrature construction failed (singular system or negative weight)."""


class DivergenceError(SchnError):
    """Training produced a non-finite loss."""
