"""Exception hierarchy shared across the package."""


class ConfppError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(ConfppError, ValueError):
    """Malformed or inconsistent input data."""


class CapacityError(ValidationError):
    """A size limit (site count, operator dimension) was exceeded."""


class GroundMismatchError(ValidationError):
    """Operands live on different ground models."""


class EvaluationError(ConfppError):
    """A user-supplied callable returned a non-finite value.

    Carries the offending configuration in ``configuration``.
    """

    def __init__(self, message, configuration=None):
        super().__init__(message)
        self.configuration = configuration


class OverlapError(ConfppError):
    """Two configurations share a point where disjointness is required."""


class CocycleError(ValidationError):
    """A Papangelou evaluator violates the cocycle consistency condition."""


class UndefinedConditionalError(ConfppError):
    """Conditional intensity requested at a configuration of zero mass."""


class StabilityError(ConfppError):
    """A sampler observed its stability bound violated (e.g. unbounded rate)."""
