"""Exception hierarchy shared by every module of the package."""


class FilteredHenonError(Exception):
    """Base class for all errors raised by ``filtered_henon``."""


class FilterDesignError(FilteredHenonError, ValueError):
    """A filter cannot be built from the requested zeros or parameters."""


class NormalizationUndefinedError(FilterDesignError):
    """A zero sits at z = 1, so the unit-gain normalization divides by zero."""


class NonRealCoefficientsError(FilterDesignError):
    """The zero set is not closed under conjugation."""


class DegenerateFilterError(FilterDesignError):
    """Zero gain, zero leading tap, or a design whose taps sum to zero."""


class DimensionMismatchError(FilteredHenonError, ValueError):
    """A state vector or matrix has the wrong shape for the system."""


class DivergedStateError(FilteredHenonError, ArithmeticError):
    """A map step was requested on a non-finite state."""


class NumericalFailureError(FilteredHenonError, ArithmeticError):
    """An eigenvalue computation did not produce a usable result."""


class InputTooShortError(FilteredHenonError, ValueError):
    """Not enough samples for the requested spectral estimate."""
