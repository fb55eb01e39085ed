"""Exception types raised across the package."""


class EigenflowError(Exception):
    """Base class for all package errors."""


class ShapeMismatchError(EigenflowError):
    """Two fields with incompatible grid shapes were combined."""


class MaxItersExceeded(EigenflowError):
    """Inner solver hit its iteration cap before reaching the residual target."""

    def __init__(self, msg, result=None):
        super().__init__(msg)
        self.result = result


class StepTooLarge(EigenflowError):
    """Time step is too large for the current iterate (dt >= ||u||)."""


class ZeroSubgradient(EigenflowError):
    """Subgradient norm vanished; the iterate entered the null space."""


class DegenerateInput(EigenflowError):
    """Input lies in the null space of the functional after projection."""


class ZeroNorm(EigenflowError):
    """A quantity that must be nonzero (||u|| or ||T(u)||) vanished."""


class ZeroImage(EigenflowError):
    """Linear operator mapped the iterate to (numerically) zero."""


class ConfigError(EigenflowError):
    """Malformed experiment configuration."""
