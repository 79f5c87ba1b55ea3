"""Exception types shared across the package."""


class ZresError(Exception):
    """Base class for all package-specific errors."""


class DomainError(ZresError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class EmptyBandError(ZresError):
    """The prime band is empty because exp((log_2 N)^gamma) <= e."""


class BudgetExceededError(ZresError):
    """An enumeration or scan exceeded its configured budget."""


class PrecisionError(ZresError):
    """The requested accuracy cannot be certified with available resources."""


class QuadratureError(ZresError):
    """Adaptive quadrature failed to reach the requested tolerance in budget."""


class ExtensionRequiredError(ZresError):
    """A tabulated function was queried beyond its tabulated range."""


class TailNotCertifiedError(ZresError):
    """The integration tail cannot be bounded below the requested accuracy."""


class InsufficientGridError(ZresError):
    """A sampled-function check was given too coarse a grid."""
