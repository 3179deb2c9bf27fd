"""Error types shared across the package.

The CLI maps these onto exit codes: configuration and admissibility problems
exit with 2, numerical-quality problems with 3.
"""


class StableSDEError(Exception):
    """Base class for package errors."""

    exit_code = 1


class ParameterError(StableSDEError, ValueError):
    """An argument is outside its admissible range."""

    exit_code = 2


class ConfigurationError(StableSDEError, ValueError):
    """An experiment/solver configuration is inconsistent."""

    exit_code = 2


class AdmissibilityError(ConfigurationError):
    """A drift/scheme/setting combination violates a well-posedness condition.

    Attributes
    ----------
    violations : list of str
        One human readable line per violated inequality.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class DomainError(StableSDEError, ValueError):
    """Evaluation outside the domain where an object is defined."""

    exit_code = 2


class AlignmentError(StableSDEError, ValueError):
    """Two fields live on different grids or time lists."""

    exit_code = 2


class ResolutionError(StableSDEError, RuntimeError):
    """A grid or quadrature is too coarse for the requested accuracy."""

    exit_code = 3


class DivergenceError(StableSDEError, RuntimeError):
    """A fixed-point iteration failed to contract."""

    exit_code = 3

    def __init__(self, message, time=None):
        self.time = time
        super().__init__(message)


class CapacityError(StableSDEError, MemoryError):
    """A request would exceed the configured memory budget."""

    exit_code = 3


class InsufficientSignalError(StableSDEError, RuntimeError):
    """Too few error levels are above the noise floor to fit a rate."""

    exit_code = 3
