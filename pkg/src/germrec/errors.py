"""Exception types shared across the package."""


class GermrecError(ValueError):
    """Base class for all library errors."""


class GridMismatch(GermrecError):
    """Two sampled functions live on different grids."""


class SupportOverflow(GermrecError):
    """A support would leave the computational domain."""


class ScaleTooLarge(GermrecError):
    """A rescaling would push a test function outside its support budget."""


class ScaleBelowResolution(GermrecError):
    """A rescaling is too small for the grid to resolve."""


class DegenerateSystem(GermrecError):
    """The moment-matching linear system cannot be solved."""


class ArityMismatch(GermrecError):
    """Wrong number of derivative arrays for the requested order."""


class HypothesisViolated(GermrecError):
    """Input data fails a declared summability hypothesis."""


class NotConvergent(GermrecError):
    """A scale series fails its geometric-decay check."""


class ParameterViolation(GermrecError):
    """Exponent or integrability parameters violate their constraints."""
