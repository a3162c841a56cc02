"""Exception types shared across the package."""


class VolswapError(Exception):
    """Base class for all package-specific errors."""


class DomainError(VolswapError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class SingularityError(DomainError):
    """The requested evaluation sits on a singular point (e.g. nu == 0)."""


class AccuracyError(VolswapError, RuntimeError):
    """A numerical routine cannot certify the requested accuracy."""


class InstabilityError(VolswapError, RuntimeError):
    """A discretization produced values outside its proven bounds."""


class InconclusiveError(VolswapError, RuntimeError):
    """A verification check was run outside the range where it is meaningful."""
