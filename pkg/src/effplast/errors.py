"""Exception hierarchy shared by all models."""


class EffplastError(Exception):
    """Base class for every error raised by the package."""


class DomainError(EffplastError, ValueError):
    """An input lies outside the admissible parameter domain."""


class SingularError(EffplastError):
    """A linear system is singular or too badly conditioned to trust."""


class GeometryError(EffplastError, ValueError):
    """Inconsistent radii, incidence data or subdomain layout."""


class SolverError(EffplastError):
    """A linear solve produced an unacceptable residual."""


class NonConvergence(EffplastError):
    """An iterative scheme hit its iteration limit."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ConfigError(EffplastError, ValueError):
    """A scenario configuration does not match the expected schema."""


class SchemaError(EffplastError, KeyError):
    """A result file lacks a requested column."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class RangeError(EffplastError, ValueError):
    """A time argument lies outside a load protocol."""
