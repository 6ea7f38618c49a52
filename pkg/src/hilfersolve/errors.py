"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of an operation."""


class AccuracyError(RuntimeError):
    """A series or quadrature failed to reach the requested accuracy.

    Carries ``last_term``, the magnitude of the last computed term, when the
    failure comes from a truncated series.
    """

    def __init__(self, message, last_term=None):
        super().__init__(message)
        self.last_term = last_term


class OverflowGuardError(AccuracyError):
    """Evaluation aborted because intermediate magnitudes exceeded the guard."""


class ContractionError(RuntimeError):
    """A fixed-point map was detected to be non-contractive."""


class IterationError(RuntimeError):
    """Iteration budget exhausted without convergence.

    ``history`` holds the successive difference norms (or ratios) seen so far.
    """

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class ConfigError(ValueError):
    """A problem file or configuration object is invalid."""
