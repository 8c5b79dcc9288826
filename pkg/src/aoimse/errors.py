"""Exception hierarchy shared by all modules."""


class AoiMseError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(AoiMseError, ValueError):
    """An input violates a documented precondition."""


class UnstableSystemError(ValidationError):
    """The system matrix has an eigenvalue with nonnegative real part."""


class InfeasibleError(AoiMseError):
    """The inputs are well formed but no operating point exists."""


class ZeroRateCode(InfeasibleError):
    """The tolerated distortion is so large that nothing needs to be sent."""


class ZeroCapacity(InfeasibleError):
    """The channel cannot carry information."""


class InfeasibleRoot(InfeasibleError):
    """The blocklength relation has no positive root."""


class NumericalError(AoiMseError):
    """An iterative numerical routine did not converge."""


class QuadratureError(NumericalError):
    pass


class SeriesError(NumericalError):
    pass
