"""Exception types raised across the package."""


class OstroError(Exception):
    """Base class for all package errors."""


class DomainError(OstroError, ValueError):
    """An argument left the Lagrangian's declared trust box."""


class EvaluationError(OstroError, ArithmeticError):
    """A Lagrangian or derived quantity evaluated to a non-finite number."""


class SingularLagrangianError(OstroError, ArithmeticError):
    """The second derivative in the highest-order variable vanished."""


class InversionError(OstroError, ArithmeticError):
    """Newton inversion of a momentum relation failed to converge.

    ``best`` and ``residual`` hold the best iterate found and its residual.
    """

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class StationaryPointError(OstroError, ArithmeticError):
    """The stationary-phase conditions could not be solved."""


class IntegrationBlowUp(OstroError, ArithmeticError):
    """A trajectory left finite range; ``escape_time`` records when."""

    def __init__(self, message, escape_time):
        super().__init__(message)
        self.escape_time = escape_time


class NormBlowUp(OstroError, ArithmeticError):
    """Wave-function norm exceeded the configured bound during evolution."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class ConfigError(OstroError, ValueError):
    """An invalid scenario configuration; ``field`` names the offending key."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
