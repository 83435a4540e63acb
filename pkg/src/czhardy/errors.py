"""Exception types raised by the package.

Every error that a caller may want to catch programmatically has its own
class; plain ValueError is reserved for misuse of the Python API itself
(wrong shapes, non-positive tolerances and the like).
"""


class CZHardyError(Exception):
    """Base class for package errors."""


class NoAdmissibleSplit(CZHardyError):
    """Neither split strategy produced all-admissible children."""


class ContainmentViolation(CZHardyError):
    """A sampled point of the set fell outside the enclosing ball.

    Signals that the configured kappa0 is too small for this set.
    """


class RegionNotResolved(CZHardyError):
    """The requested region is not covered by the function's domain."""


class SupportViolation(CZHardyError):
    """A function has nonzero values outside its declared support."""


class RootAverageTooLarge(CZHardyError):
    """Stopping-time precondition failed: root average above threshold."""


class AlphaTooSmall(CZHardyError):
    """The re-expansion level alpha is below the admissible floor."""


class NonzeroMean(CZHardyError):
    """An operation requiring vanishing integral received a function with mean."""


class ExponentOrder(CZHardyError):
    """Exponents must satisfy 1 < p < p1 <= inf."""


class ZeroBMONorm(CZHardyError):
    """Tail analysis is undefined when the oscillation norm vanishes."""


class NonFiniteKernelValue(CZHardyError):
    """A kernel evaluation returned NaN or infinity."""


class AtomInvalid(CZHardyError):
    """The supplied function does not certify as an atom."""


class EmptyGrid(CZHardyError):
    """A grid-based operation received an empty grid."""


class ConfigInvalid(CZHardyError):
    """The run configuration failed validation."""
