"""Exception types shared across the package."""


class RegretLabError(Exception):
    """Base class for all package errors."""


class ConfigError(RegretLabError, ValueError):
    """Invalid or unsupported configuration (dimension, pairing, schedule, regime)."""


class DomainError(RegretLabError, ValueError):
    """A point lies outside the domain required by an operation."""


class SolverError(RegretLabError, RuntimeError):
    """An inner minimization failed to reach its target accuracy.

    Attributes
    ----------
    certificate : SolveCertificate or None
        The best certificate reached before giving up.
    step : int or None
        Round index of the online run, when raised from a run.
    """

    def __init__(self, message, certificate=None, step=None):
        super().__init__(message)
        self.certificate = certificate
        self.step = step


class DiagnosticError(RegretLabError, RuntimeError):
    """A diagnostic quantity could not be computed (e.g. missing hindsight optimum)."""
