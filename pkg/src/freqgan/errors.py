"""Exception types shared across the package."""


class FreqGANError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(FreqGANError, ValueError):
    pass


class ContractError(FreqGANError, ValueError):
    """A documented precondition of an operation was violated."""


class NumericsError(FreqGANError, ArithmeticError):
    """A NaN or Inf showed up where finite values are required."""


class DegenerateBatchError(FreqGANError, ValueError):
    pass


class PadRequiredError(FreqGANError, ValueError):
    """Raised when a transform needs power-of-two extents; zero-pad first."""


class ConfigError(FreqGANError, ValueError):
    pass


class FormatError(FreqGANError, ValueError):
    """Malformed file contents (PGM header, CIFAR record layout, ...)."""
