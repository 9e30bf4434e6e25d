"""Error and warning types shared across the package.

Every error carries a short machine-readable ``code`` so the command line
layer can emit a structured error envelope without string matching.
"""


class BesselOpError(Exception):
    code = "error"


class UsageError(BesselOpError, ValueError):
    """Invalid arguments or unmet preconditions (caller's fault)."""

    code = "usage"


class DomainError(BesselOpError, ArithmeticError):
    """A numerical domain problem detected while computing."""

    code = "domain"


class UnsupportedOrderError(UsageError):
    code = "unsupported_order"


class StepTooLargeError(UsageError):
    code = "step_too_large"


class GridMismatchError(UsageError):
    code = "grid_mismatch"


class OutOfScopeError(UsageError):
    code = "out_of_scope"


class UndefinedRatioError(DomainError):
    code = "undefined_ratio"


class EvaluationError(DomainError):
    code = "evaluation"


class ConstructionError(DomainError):
    code = "construction"


class TruncationWarning(UserWarning):
    """Mass was lost because an evaluation left the truncated domain."""


class ResolutionWarning(UserWarning):
    """The grid is too coarse for the requested quantity."""
