"""Exception types shared across the package."""


class PreconditionError(ValueError):
    """An input violates a documented precondition."""


class InequalityViolation(RuntimeError):
    """A sharp inequality failed beyond its numerical error bar."""


class ConvergenceError(RuntimeError):
    """An integral or tail estimate did not converge."""
