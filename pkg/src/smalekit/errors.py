"""Exception types shared across the toolkit.

ValidationError maps to CLI exit code 2, NumericalError to exit code 3.
"""


class SmaleKitError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(SmaleKitError):
    """Bad configuration, schema violation, or invalid input data."""


class NumericalError(SmaleKitError):
    """A numerical precondition failed during computation."""


class NotHyperbolic(NumericalError):
    """Matrix has an eigenvalue on (or numerically at) the unit circle."""


class NotOnLeaf(NumericalError):
    """Points do not converge on the requested side within the horizon."""


class InsufficientData(NumericalError):
    """Too few usable readings to produce an estimate."""


class TruncationDominated(NumericalError):
    """More than half of the readings hit the truncation horizon."""


class CoverTooCoarse(ValidationError):
    """Rectangle cover scale exceeds the bracket radius."""


class Oversize(ValidationError):
    """Requested object exceeds the configured size budget."""


class InvalidPath(ValidationError):
    """Digit sequence violates the vertical-edge rule."""


class DigitOutOfRange(NumericalError):
    """A greedy digit left the allowed generator set (s_rad too small)."""


class NotCodimensionOne(NumericalError):
    """Requested leaf side is not one-dimensional (or not a torus)."""


class NonFiniteExponent(NumericalError):
    """Pinched-spectrum check requires four finite positive exponents."""
