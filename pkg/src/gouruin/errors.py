"""Exception hierarchy shared across the package."""


class GouError(Exception):
    """Base class for all package errors."""


class InvalidModelError(GouError):
    """A triplet, measure, or config violates a structural invariant."""


class UndeterminedError(GouError):
    """A quadrature-backed decision could not be resolved within tolerance.

    ``residual`` carries the best available error bound, when one exists.
    """

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class NotFiniteVariationError(GouError):
    """Drift-vector form requested for a process of infinite variation."""


class NotApplicableError(GouError):
    """The requested quantity is undefined for this input (e.g. the
    subordinator drift of a measure with negative jumps)."""


class NotSupportedError(GouError):
    """Operation not available for this measure tier."""


class IndeterminateFormError(GouError):
    """Extended-real arithmetic hit an indeterminate form (inf - inf, 0 * inf)."""
