"""Exception hierarchy.

Validation problems (bad inputs, out-of-domain parameters) derive from
:class:`DomainError`; failures of a numerical procedure on otherwise valid
input derive from :class:`NumericalError`.  The CLI maps the two families
to distinct exit codes.
"""


class SingOscError(Exception):
    """Base class for all package errors."""


class DomainError(SingOscError, ValueError):
    """Parameter outside the admissible domain."""


class DimensionError(DomainError):
    """Truncation dimension too small."""


class ConfigError(DomainError):
    """Invalid run configuration."""


class NumericalError(SingOscError, ArithmeticError):
    """A numerical procedure failed on valid input."""


class IntegrationError(NumericalError):
    """ODE integration failed (step-size underflow or solver error)."""


class PlateauError(NumericalError):
    """Profile does not sit on its asymptotic plateaus at the window ends."""


class BranchError(NumericalError):
    """Square-root branch of the generating function is unusable."""


class LogMagnitudeOverflow(NumericalError):
    """Intermediate log-magnitude exceeded the configured bound."""


class TailCapError(NumericalError):
    """Row extent cap reached before the tail bound met its tolerance."""
