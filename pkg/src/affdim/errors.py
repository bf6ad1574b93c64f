"""Exception types shared across the toolkit."""


class InvalidInputError(ValueError):
    """Raised when an argument violates a documented precondition."""


class DegenerateSubspaceError(InvalidInputError):
    """Raised when a set of vectors collapses below the requested rank."""


class ResourceLimitError(RuntimeError):
    """Raised when an enumeration would exceed the configured visit budget."""

    def __init__(self, requested, cap, what="word visits"):
        self.requested = requested
        self.cap = cap
        super().__init__(
            f"{what}: {requested:.3g} requested exceeds the cap of {cap:.3g} "
            "(raise it with AFFDIM_BUDGET)"
        )


class UnsupportedStructureError(InvalidInputError):
    """Raised when a closed-form routine is asked about a tuple it cannot handle."""


class ConsistencyError(RuntimeError):
    """Raised when an internal numerical cross-check fails."""
