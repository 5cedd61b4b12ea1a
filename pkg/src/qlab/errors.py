class DomainError(ValueError):
    """Evaluation requested outside the region where a quantity is defined."""


class ConvergenceError(RuntimeError):
    """An iterative numerical procedure failed to reach its tolerance."""


class PhaseUnwrapError(ValueError):
    """Adjacent phase samples are too far apart to continue a branch."""
