"""Exception hierarchy shared by all modules.

The CLI maps :class:`ValidationError` to exit status 2 and
:class:`NumericalError` (and subclasses) to exit status 3.
"""


class MajorantError(Exception):
    """Base class for all library errors."""


class ValidationError(MajorantError, ValueError):
    """Input data violates a stated invariant (bad parameters, bad config)."""


class NumericalError(MajorantError, ArithmeticError):
    """A numerical procedure failed to deliver a trustworthy result."""


class QuadratureError(NumericalError):
    """Successive quadrature refinements disagree beyond tolerance.

    Attributes
    ----------
    estimates : tuple
        The last two estimates that were compared.
    """

    def __init__(self, message, estimates=None):
        super().__init__(message)
        self.estimates = estimates


class CertificationError(NumericalError):
    """A sampled bound could not be certified with a finite constant."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class CalibrationError(NumericalError):
    """A time-quadrature rule failed its calibration identity."""


class TruncationWarning(UserWarning):
    """Kernel mass outside the periodic box exceeds the monitoring tolerance."""


class BracketError(NumericalError):
    """A bisection could not establish a sign change within its range.

    Attributes
    ----------
    records : list
        The evaluations that were made before giving up.
    """

    def __init__(self, message, records=None):
        super().__init__(message)
        self.records = records or []
