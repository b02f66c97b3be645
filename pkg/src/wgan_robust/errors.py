"""Exception types raised across the package."""


class InvalidInputError(ValueError):
    """Arguments violate a documented precondition (shape, range, finiteness)."""


class NotPositiveDefiniteError(InvalidInputError):
    """Cholesky factorization hit a non-positive pivot."""

    def __init__(self, pivot: int, message: str | None = None):
        self.pivot = pivot
        super().__init__(message or f"matrix is not positive definite (pivot {pivot})")


class InvalidStateError(RuntimeError):
    """An object was used out of sequence, e.g. a stale forward cache."""


class DivergedTrainingError(RuntimeError):
    """The adversarial objective became non-finite during training."""

    def __init__(self, iteration: int, message: str | None = None):
        self.iteration = iteration
        super().__init__(message or f"training diverged at iteration {iteration}")
