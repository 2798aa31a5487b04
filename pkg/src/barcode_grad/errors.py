"""Exception hierarchy shared across the package."""


class BarcodeGradError(Exception):
    """Base class for all errors raised by barcode_grad."""


class InvalidSimplex(BarcodeGradError, ValueError):
    pass


class DuplicateSimplex(BarcodeGradError, ValueError):
    pass


class EmptyComplex(BarcodeGradError, ValueError):
    pass


class NotAFiltration(BarcodeGradError, ValueError):
    """Raised when a face has a larger value than one of its cofaces."""

    def __init__(self, face, coface, message=None):
        self.face = face
        self.coface = coface
        super().__init__(message or f"f{face} > f{coface}: values are not monotone under inclusion")


class Undefined(BarcodeGradError, ValueError):
    pass


class OrderViolation(BarcodeGradError, ValueError):
    pass


class BadDegree(BarcodeGradError, ValueError):
    pass


class BadExponent(BarcodeGradError, ValueError):
    pass


class ShapeError(BarcodeGradError, ValueError):
    pass


class NotOnSphere(BarcodeGradError, ValueError):
    pass


class NotPositiveDefinite(BarcodeGradError, ValueError):
    pass


class InfiniteBarsUnsupported(BarcodeGradError, ValueError):
    pass


class SingularParameter(BarcodeGradError):
    """The filter pre-order is not locally constant at ``theta``.

    ``witnesses`` lists pairs of simplex indices whose values are tied
    without being tied identically in a neighborhood.
    """

    def __init__(self, theta, witnesses, reason="pre-order not locally constant"):
        self.theta = theta
        self.witnesses = list(witnesses)
        super().__init__(f"singular parameter ({reason}); {len(self.witnesses)} tie witness(es)")


class UnstableDirection(BarcodeGradError):
    pass


class StalledAtSingularity(BarcodeGradError):
    pass


class OracleTooLarge(BarcodeGradError, ValueError):
    pass


class ConfigError(BarcodeGradError, ValueError):
    pass
