"""Exception types shared across the package."""

import numpy as np


class DomainError(ValueError):
    """An argument lies outside the admissible domain of an operation."""


class GroupRangeError(OverflowError):
    """A logarithm-group evaluation left the representable floating range."""


class TheoremInapplicableError(DomainError):
    """The proportionality factor G'(0) + G''(0) vanishes."""


class ConvergenceError(RuntimeError):
    """A numerical routine failed to reach its tolerance.

    ``value`` and ``err_est`` carry the best estimate that was achieved.
    """

    def __init__(self, message, value=None, err_est=None):
        super().__init__(message)
        self.value = value
        self.err_est = err_est


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """A matrix expected to be a Riemannian metric is not positive definite."""

    def __init__(self, message, spectrum=None):
        super().__init__(message)
        self.spectrum = None if spectrum is None else np.asarray(spectrum)


class NonFiniteSampleError(ArithmeticError):
    """A finite-difference stencil produced a non-finite function value."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = None if point is None else np.asarray(point)
