"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An argument is outside its documented domain (non-finite, wrong range, ...)."""


class UnphysicalStateError(ValueError):
    """A covariance matrix violates the uncertainty relation."""


class DegenerateStateError(ValueError):
    """A state or outcome has (numerically) zero norm and cannot be conditioned on."""


class NumericalStabilityError(ArithmeticError):
    """A computation hit the floating-point noise floor.

    Raised instead of silently returning out-of-range probabilities or
    overlaps; typically means a coherent-ring radius was chosen too small or
    a Gaussian-pair matrix is numerically singular.
    """


class ReductionFailedError(RuntimeError):
    """Rank reduction could not find a usable pivot; the input was left unchanged."""
