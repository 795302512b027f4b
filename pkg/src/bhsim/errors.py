"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class SizingError(DomainError):
    """A Hilbert-space sector exceeds the configured dimension cap."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class KrylovStepError(ConvergenceError):
    """Krylov propagation could not meet its accuracy target on a time step."""

    def __init__(self, message, step=None, residual=None):
        super().__init__(message, residual=residual)
        self.step = step
