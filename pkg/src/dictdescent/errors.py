"""Exception types shared across the package."""


class SpaceMismatchError(ValueError):
    """Two vectors were combined whose length, weights, or exponent differ."""


class InvalidVectorError(ValueError):
    """A vector was constructed from non-finite or structurally bad data."""


class ParameterError(ValueError):
    """A model parameter is outside its admissible range."""


class DictionaryDegenerateError(ValueError):
    """A dictionary construction produced a degenerate (rank-deficient) family."""


class ConvergenceError(RuntimeError):
    """An iterative solver exhausted its budget before reaching tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class UnboundedLineError(RuntimeError):
    """A line search diverged; the objective is not coercive along the line."""


class ConfigError(ValueError):
    """An experiment configuration failed validation."""
