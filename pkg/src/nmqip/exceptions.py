"""Exception types raised by the package."""


class DimensionError(ValueError):
    """Operator or subsystem dimensions do not fit together."""


class KLViolation(ValueError):
    """A Kraus set does not satisfy the Knill-Laflamme condition on the code."""


class LeakageError(ValueError):
    """A state has weight outside the domain of a subsystem frame or embedding."""


class NumericalError(RuntimeError):
    """Base class for failures of a numerical procedure on valid input."""


class SingularMapError(NumericalError):
    """A dynamical map is too ill-conditioned to invert."""


class TruncationError(NumericalError):
    """A Fock-space truncation cannot represent the requested state."""


class GeneratorError(NumericalError):
    """A superoperator is not a valid time-local generator."""
