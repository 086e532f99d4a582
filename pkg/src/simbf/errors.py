"""Exception hierarchy."""


class SimbfError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(SimbfError, ValueError):
    """Invalid scenario or campaign parameters."""


class DomainError(SimbfError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class StructuralError(SimbfError, ValueError):
    """Inconsistent shapes, indices or layer structure."""


class SingularChannelError(SimbfError, ArithmeticError):
    """The reduced channel Gram matrix is not positive definite.

    Attributes
    ----------
    pivot : int
        Zero-based index of the first pivot that failed.
    """

    def __init__(self, pivot, message=None):
        self.pivot = pivot
        super().__init__(message or f"channel Gram matrix is singular at pivot {pivot}")
