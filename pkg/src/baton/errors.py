"""Exception hierarchy shared by every baton module."""


class BatonError(Exception):
    """Base class for all errors raised by this package."""


class InvalidConfig(BatonError, ValueError):
    pass


class DegenerateGeometry(BatonError, ValueError):
    """A position coincides with a link endpoint, so the PLCR is undefined."""


class WindowTooLong(BatonError, ValueError):
    pass


class AllZeroTrace(BatonError):
    """No dynamic energy above the noise floor anywhere in a CSI trace."""


class InvalidCdc(BatonError, ValueError):
    pass


class InvalidHorizon(BatonError, ValueError):
    pass


class InsufficientLinks(BatonError):
    """Fewer than two links carry information, so 2-D velocity is under-determined."""


class SingularSystem(BatonError):
    """The stacked Fresnel coefficient matrix is (numerically) rank deficient."""


class TooShort(BatonError, ValueError):
    pass


class ScenarioTooShort(BatonError, ValueError):
    pass


class InvalidHyperparams(BatonError, ValueError):
    pass


class GenerationFailed(BatonError):
    pass


class LengthMismatch(BatonError, ValueError):
    pass


class ShapeMismatch(BatonError, ValueError):
    pass


class InvalidBucket(BatonError, ValueError):
    pass
