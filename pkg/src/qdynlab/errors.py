"""Exception taxonomy shared across the package."""


class QdynlabError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(QdynlabError, ValueError):
    """An object or argument violates a structural invariant."""


class DimensionMismatch(ValidationError):
    """Operands live on incompatible Hilbert-space dimensions."""


class IntegrationError(QdynlabError, RuntimeError):
    """A numerical invariant was violated during time evolution."""


class StepSizeError(IntegrationError):
    """The requested step size violates a stability bound."""


class ConfigError(QdynlabError, ValueError):
    """An experiment configuration is malformed or incomplete."""
