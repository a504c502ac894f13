class FilamentError(Exception):
    """Base class for every error raised by the filament toolkit."""


class DomainError(FilamentError, ValueError):
    """A numeric argument lies outside the domain of a formula."""


class NumericalInstabilityError(FilamentError, ArithmeticError):
    """Floating-point evaluation left the range the mathematics guarantees."""


class InsufficientDataError(FilamentError, ValueError):
    """A trace or snapshot list is too short for the requested statistic."""


class SolverError(FilamentError, RuntimeError):
    """A numeric root finder or minimizer did not converge."""


class ConfigError(FilamentError, ValueError):
    """Configuration file is missing, malformed or violates its schema."""


class CheckpointError(FilamentError, IOError):
    """Checkpoint file is corrupt or belongs to another run."""
