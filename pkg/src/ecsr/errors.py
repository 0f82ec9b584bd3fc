"""Exception types shared across the package."""


class EcsrError(Exception):
    """Base class for all errors raised by this package."""


class MatrixFormatError(EcsrError):
    """A MatrixMarket file could not be parsed; the message carries the line number."""


class ContainerError(EcsrError):
    """An ECSR container is malformed, truncated, or internally inconsistent."""


class DeltaOverflowError(EcsrError):
    """A column gap exceeds the configured delta range (an extraction invariant was violated)."""
