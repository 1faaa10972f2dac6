"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class ResourceError(RuntimeError):
    """A request would exceed the desk-scale size limits."""


class InvariantViolation(ArithmeticError):
    """A numerical invariant failed during a computation."""

    def __init__(self, invariant, detail=""):
        self.invariant = invariant
        msg = invariant if not detail else f"{invariant}: {detail}"
        super().__init__(msg)
