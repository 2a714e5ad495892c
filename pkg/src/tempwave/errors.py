"""Exception types shared across the package.

The CLI maps each family onto its own exit status.
"""


class TempwaveError(Exception):
    exit_code = 1


class ConfigError(TempwaveError, ValueError):
    exit_code = 1

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CapacityError(TempwaveError):
    """Raised when a dense system would exceed the configured unknown budget."""

    exit_code = 2


class NumericalError(TempwaveError, ArithmeticError):
    exit_code = 3


class NearSingularError(NumericalError):
    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message)


class ReproductionMismatch(TempwaveError):
    exit_code = 4
