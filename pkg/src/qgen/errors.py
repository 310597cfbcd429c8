"""Exception types raised across the package."""


class QgenError(Exception):
    """Base class for all package errors."""


class ValidationError(QgenError, ValueError):
    """An operator or model violates its declared invariants."""


class UnknownLabel(QgenError, KeyError):
    """A subsystem label is not part of the operator's shape."""

    def __str__(self):
        return Exception.__str__(self)


class ShapeMismatch(QgenError, ValueError):
    """Operands live on incompatible Hilbert spaces."""


class SingularLog(QgenError, ArithmeticError):
    """Matrix logarithm requested for an operator with a (numerically) zero eigenvalue."""


class ZeroProbabilityOutcome(QgenError, ArithmeticError):
    """A post-measurement state was requested for an outcome of negligible probability."""


class EnumerationCap(QgenError, RuntimeError):
    """Exact enumeration would exceed the configured cap."""


class RangeExhausted(QgenError, ArithmeticError):
    """A Legendre-dual search hit the boundary of its search interval."""


class InvalidMgfBound(QgenError, ValueError):
    """A supplied log-MGF bound does not dominate the measured profile."""


class NotFactorized(QgenError, ValueError):
    """A bound requiring tensor-product structure was called without it."""


class DimensionCap(QgenError, ValueError):
    """A conic program would exceed the dimension cap."""


class SolverFailure(QgenError, RuntimeError):
    """The conic solver did not return an optimal solution."""


class NetTooLarge(QgenError, RuntimeError):
    """A covering net grew beyond the enumeration cap."""


class ConfigError(QgenError, ValueError):
    """A scenario configuration file is malformed or inconsistent."""


class IoError(QgenError, OSError):
    """A report could not be written."""
