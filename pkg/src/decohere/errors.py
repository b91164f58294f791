"""Exception hierarchy shared by all modules.

``ValidationError`` subclasses mean the inputs were malformed; the CLI maps
them to exit status 2. ``NumericalError`` subclasses mean a well-formed
request could not be computed; the CLI maps them to exit status 3.
"""


class DecohereError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(DecohereError, ValueError):
    pass


class NumericalError(DecohereError, ArithmeticError):
    pass


# formfactor
class InvalidWeight(ValidationError):
    pass


class NonPositiveFrequency(ValidationError):
    pass


class DivergentIntegral(NumericalError):
    pass


class IntegrationFailure(NumericalError):
    pass


# dephasing
class WindowTooNarrow(ValidationError):
    pass


class BoundViolation(NumericalError):
    """gamma_t exceeded the false-decoherence bound 8 ||g||^2."""


# mastereq
class GridMismatch(ValidationError):
    pass


class StepTooLarge(NumericalError):
    pass


class TruncationLeak(NumericalError):
    pass


# scattering
class InvalidTarget(ValidationError):
    pass


# chaos
class InvalidSize(ValidationError):
    pass


class BroadeningTooSmall(ValidationError):
    pass


class WindowOutsideGrid(ValidationError):
    pass
