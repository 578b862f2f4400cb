"""Exception types shared across the package."""


class ConfigError(Exception):
    """Malformed or out-of-range scenario configuration.

    Carries an optional line number for file-based configs.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NumericalError(RuntimeError):
    """A numerical stage failed (rank deficiency, non-convergence, ...)."""


class DegenerateBeamsError(NumericalError):
    """Two beams are numerically indistinguishable (|overlap| -> 1)."""
