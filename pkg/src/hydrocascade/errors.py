"""Exception hierarchy shared across the package."""


class CascadeError(Exception):
    """Base class for every error raised by hydrocascade."""


class DomainError(CascadeError, ValueError):
    """A domain object violates one of its own invariants."""


class CurveError(DomainError):
    """A curve is malformed (empty table, non-monotone abscissae, ...)."""


class TopologyError(CascadeError):
    """The hydraulic arc set is not a DAG."""

    def __init__(self, message, cycle=()):
        super().__init__(message)
        self.cycle = tuple(cycle)


class ConfigurationError(CascadeError, ValueError):
    """Inputs required for a computation are missing or inconsistent."""


class FitError(CascadeError, ValueError):
    """A piecewise-linear fit cannot be computed from the given samples."""


class InfeasibleFitError(FitError):
    """The error tolerance cannot be met within the piece cap."""

    def __init__(self, message, minimal_pieces=None):
        super().__init__(message)
        self.minimal_pieces = minimal_pieces


class SamplingError(CascadeError, ValueError):
    """A sample provider failed or returned a non-finite value."""


class BuildError(CascadeError, ValueError):
    """The optimization model cannot be built from the system and config."""


class ExtractionError(CascadeError):
    """A solution does not carry a variable the schedule needs."""


class OracleLimitError(CascadeError):
    """The brute-force enumeration is larger than its declared bound."""


class InputError(CascadeError, ValueError):
    """A file or CLI input is invalid."""
